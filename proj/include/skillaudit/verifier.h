#pragma once

// Replay-based verification, evidence bundles, and regression sweeps.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillaudit/audit_log.h"
#include "skillaudit/compiler.h"
#include "skillaudit/evidence.h"
#include "skillaudit/skill_graph.h"

namespace skillaudit {

/// Executes the program on a regenerated task. Failures are data: a failing
/// check or tool error yields outcome_pass = false with the check recorded.
/// Contract checks include the output-type postcondition for the task kind.
ReplayRecord replay_program(const ToolRegistry& registry, const SkillProgram& program, const Task& task);

struct VerifierConfig {
  SuiteSpec suite;
};

/// Suite tasks (holdout then perturbation) for each applicable kind.
std::vector<Task> suite_tasks(const SuiteSpec& suite, const SkillInterface& iface);

/// Replays the candidate on its suite, builds the bundle, and appends it to
/// the log as an EVIDENCE entry before returning it. The verifier sees only
/// the candidate, the environment, and its own configuration.
EvidenceBundle verify_candidate(const CandidateSkill& candidate, const Environment& env, const VerifierConfig& config,
                                AuditLog& log);

class VersionMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RecordAgreement {
  TaskRef task_ref;
  bool agrees = false;
  std::string detail;
};

struct ReproductionReport {
  Digest bundle_hash;
  std::vector<RecordAgreement> records;
  PassRate replayed_pass_rate;
  Decision replayed_decision = Decision::kFail;
  bool full_agreement = false;
};

/// Regenerates every task_ref and re-runs replay_program. Throws
/// VersionMismatch, before replaying anything, when the bundle's versions
/// differ from the environment's.
ReproductionReport replay_bundle(const EvidenceBundle& bundle, const Environment& env);

struct SweepResult {
  Digest skill_id;
  PassRate pass_rate;
  bool passed = false;

  bool operator==(const SweepResult&) const = default;
};

struct RegressionReport {
  std::uint64_t episode = 0;
  std::vector<SweepResult> results;
  std::vector<Digest> retired;

  bool operator==(const RegressionReport&) const = default;
};

/// Re-runs every PROMOTED node's recorded suite against `env`. Appends the
/// report as one REGRESSION entry, then retires each failing node.
RegressionReport regression_sweep(SkillGraph& graph, const Environment& env, std::uint64_t episode, AuditLog& log);

Json to_canon(const SweepResult& r);
void from_canon(const Json& j, SweepResult& out);
Json to_canon(const RegressionReport& r);
void from_canon(const Json& j, RegressionReport& out);

}  // namespace skillaudit
