#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillaudit/audit_log.h"
#include "skillaudit/evidence.h"
#include "skillaudit/skill_program.h"

namespace skillaudit {

enum class SkillStatus { kCandidate, kPromoted, kRetired };
std::string_view to_string(SkillStatus s);

enum class EdgeKind { kComposition, kFallback };
std::string_view to_string(EdgeKind k);

/// (producer output type, consumer input key, carried type).
struct EdgeContract {
  SemType producer_output = SemType::kInt;
  std::string consumer_input;
  SemType type = SemType::kInt;

  bool operator==(const EdgeContract&) const = default;
};

struct SkillNode {
  Digest skill_id;
  SkillProgram program;
  SkillInterface interface;
  SkillStatus status = SkillStatus::kCandidate;
  std::optional<Digest> evidence_ref;
  std::optional<std::uint64_t> promoted_at;
  std::optional<std::uint64_t> retired_at;
  // Step-to-step contracts of a composite whose step skills are not nodes.
  std::vector<EdgeContract> internal_contracts;

  bool operator==(const SkillNode&) const = default;
};

struct SkillEdge {
  Digest from;
  Digest to;
  EdgeKind kind = EdgeKind::kComposition;
  EdgeContract contract;
  std::optional<std::string> guard;  // FALLBACK only

  bool operator==(const SkillEdge&) const = default;
};

class PromotionRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSkill : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable-by-convention graph contents; SkillGraph publishes snapshots.
struct GraphState {
  std::map<Digest, SkillNode> nodes;
  std::vector<SkillEdge> edges;

  const SkillNode* find(const Digest& id) const;
  std::size_t promoted_count() const;

  /// Validates and inserts an edge; rejects duplicate
  /// (from, to, kind, contract) tuples and ill-typed contracts.
  void add_edge(const SkillEdge& edge);

  /// Contents as they stood during `episode`: later promotions dropped,
  /// retirements effective at or before `episode` applied.
  GraphState as_of(std::uint64_t episode) const;

  bool operator==(const GraphState&) const = default;
};

/// PROMOTED nodes whose interface accepts the task, by (promoted_at, skill_id).
std::vector<SkillNode> applicable_skills(const GraphState& graph, const TaskView& task);

/// Type check of a produced value against an edge contract. FALLBACK edges
/// also evaluate their guard on `inputs` and pass only when it holds.
CheckResult check_edge_contract(const SkillEdge& edge, const Value& produced, const ValueMap& inputs = {});

/// Live skill graph. Readers take snapshots; promote/retire are serialized
/// and each publishes a new snapshot after its audit entry is durable.
class SkillGraph {
 public:
  explicit SkillGraph(ToolRegistry registry = ToolRegistry::standard(), GraphState initial = {});

  std::shared_ptr<const GraphState> snapshot() const;

  /// Gate: node must be a CANDIDATE whose skill_id is its program hash, and
  /// bundle_hash must resolve in `log` to a consistent PASS bundle for the
  /// same skill. A duplicate skill_id returns the existing node unchanged.
  SkillNode promote(SkillNode node, const Digest& bundle_hash, std::uint64_t episode, AuditLog& log);

  /// Marks a PROMOTED node RETIRED (effective at `episode`) and logs it.
  void retire(const Digest& skill_id, const std::string& reason, std::uint64_t episode, AuditLog& log);

  /// Replays PROMOTION and RETIREMENT entries without appending anything.
  static GraphState rebuild(const std::vector<AuditEntry>& entries, ToolRegistry registry = ToolRegistry::standard());

 private:
  GraphState with_promotion(const GraphState& base, SkillNode node, const Digest& bundle_hash,
                            const EvidenceBundle& bundle, std::uint64_t episode) const;
  void infer_edges(GraphState& state, const SkillNode& node) const;
  void publish(std::shared_ptr<const GraphState> next);

  ToolRegistry registry_;
  std::mutex writer_mu_;
  mutable std::mutex publish_mu_;
  std::shared_ptr<const GraphState> state_;
};

/// Full scan: every PROMOTED node's evidence resolves to a consistent PASS
/// bundle for the same skill. Returns a description of the first violation.
std::optional<std::string> check_gate_soundness(const GraphState& graph, const std::vector<AuditEntry>& entries);

struct PromotionRecord {
  Digest skill_id;
  Digest bundle_hash;
  std::uint64_t episode = 0;
  bool operator==(const PromotionRecord&) const = default;
};

struct RetirementRecord {
  Digest skill_id;
  std::string reason;
  std::uint64_t episode = 0;
  bool operator==(const RetirementRecord&) const = default;
};

/// Canonical export of the whole graph and a DOT rendering.
std::string export_canonical(const GraphState& graph);
std::string export_dot(const GraphState& graph);

Json to_canon(SkillStatus s);
void from_canon(const Json& j, SkillStatus& out);
Json to_canon(EdgeKind k);
void from_canon(const Json& j, EdgeKind& out);
Json to_canon(const EdgeContract& c);
void from_canon(const Json& j, EdgeContract& out);
Json to_canon(const SkillNode& n);
void from_canon(const Json& j, SkillNode& out);
Json to_canon(const SkillEdge& e);
void from_canon(const Json& j, SkillEdge& out);
Json to_canon(const GraphState& g);
void from_canon(const Json& j, GraphState& out);
Json to_canon(const PromotionRecord& r);
void from_canon(const Json& j, PromotionRecord& out);
Json to_canon(const RetirementRecord& r);
void from_canon(const Json& j, RetirementRecord& out);

}  // namespace skillaudit
