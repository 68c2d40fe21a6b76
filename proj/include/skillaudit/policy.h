#pragma once

// Tabular preference policy, bounded note memory, and episode execution.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "skillaudit/skill_graph.h"

namespace skillaudit {

// ---- trajectory steps ----

struct ToolCallStep {
  std::string tool;
  std::string version;
  ValueMap args;
  Outcome result;
  std::vector<CheckResult> schema_checks;
  std::vector<CheckResult> contract_checks;  // prior-output edges and fallback guards

  bool operator==(const ToolCallStep&) const = default;
};

struct SkillCallStep {
  Digest skill_id;
  ValueMap inputs;
  Outcome result;
  bool pre_ok = false;
  bool post_ok = false;
  std::vector<CheckResult> internal_contract_checks;

  bool operator==(const SkillCallStep&) const = default;
};

struct DirectAnswerStep {
  Value answer;
  bool operator==(const DirectAnswerStep&) const = default;
};

struct MemoryWriteStep {
  std::string note;
  std::optional<std::uint64_t> evicted;

  bool operator==(const MemoryWriteStep&) const = default;
};

using Step = std::variant<ToolCallStep, SkillCallStep, DirectAnswerStep, MemoryWriteStep>;

// ---- action templates ----

struct UseTool {
  std::string tool;
  std::map<std::string, std::string> binding;  // param -> task input key

  bool operator==(const UseTool&) const = default;
};

struct UseSkill {
  Digest skill_id;
  bool operator==(const UseSkill&) const = default;
};

/// Two tool calls; `prior_param` of the second receives the first's output
/// and is absent from second.binding.
struct Compose {
  UseTool first;
  UseTool second;
  std::string prior_param;

  bool operator==(const Compose&) const = default;
};

struct Guess {
  Value value;
  bool operator==(const Guess&) const = default;
};

using ActionTemplate = std::variant<Guess, UseTool, Compose, UseSkill>;

/// Hash of the template's canonical encoding.
Digest template_key(const ActionTemplate& action);

struct Trajectory {
  std::string id;
  std::string task_id;
  std::uint64_t episode_index = 0;
  TaskKind kind = TaskKind::kSum;
  ActionTemplate action;
  std::vector<Step> steps;
  std::optional<Value> final_answer;
  bool outcome_correct = false;
  std::uint64_t context_chars = 0;

  bool operator==(const Trajectory&) const = default;
};

/// Steps that count toward max_steps and the step penalty (memory writes excluded).
std::size_t action_step_count(const Trajectory& trajectory);

// ---- policy state ----

struct PolicyState {
  std::map<std::string, double> prefs;  // "<KIND>/<template-key>"
  std::map<std::string, std::uint64_t> visit_counts;

  static std::string key(TaskKind kind, const ActionTemplate& action);
  static std::string key(TaskKind kind, const Digest& template_hash);
  double pref(TaskKind kind, const ActionTemplate& action) const;

  bool operator==(const PolicyState&) const = default;
};

/// Deterministic action list: Guess, tool templates by name then binding,
/// composes (composite kinds only), then applicable skills.
std::vector<ActionTemplate> enumerate_actions(const TaskView& task, const GraphState& graph,
                                              const ToolRegistry& registry);

/// Epsilon-greedy over prefs; ties go to the earliest template.
const ActionTemplate& select_action(const PolicyState& policy, TaskKind kind,
                                    const std::vector<ActionTemplate>& templates, const RandomStream& stream,
                                    std::uint64_t draw_index, double epsilon);

/// pref <- pref + alpha * (reward - pref); throws on non-finite reward or alpha <= 0.
void update_policy(PolicyState& policy, TaskKind kind, const ActionTemplate& action, double reward, double alpha);

// ---- memory ----

inline constexpr std::size_t kMaxNoteChars = 128;
inline constexpr std::size_t kMaxHintChars = 256;

struct MemoryNote {
  std::uint64_t id = 0;
  TaskKind kind = TaskKind::kSum;
  std::string text;
  std::uint64_t last_used = 0;

  bool operator==(const MemoryNote&) const = default;
};

class MemoryStore {
 public:
  explicit MemoryStore(std::size_t capacity = 8);

  /// Stores a note (refreshing an identical one instead of duplicating).
  /// Returns the id of the least-recently-used note evicted to make room.
  std::optional<std::uint64_t> write(TaskKind kind, std::string text, std::uint64_t episode);

  const std::vector<MemoryNote>& notes() const { return notes_; }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::uint64_t next_id_ = 0;
  std::vector<MemoryNote> notes_;
};

/// Texts of notes for `kind`, most recent first, newline-joined, cut to 256 chars.
std::string memory_hint(const MemoryStore& memory, TaskKind kind);

// ---- episodes ----

struct EpisodeConfig {
  std::size_t max_steps = 4;
  double epsilon = 0.1;
};

/// Judges a final answer; supplied by the environment so the runtime never
/// sees ground truth.
using OutcomeOracle = std::function<bool(const Value&)>;

/// Runs one template to completion. Tool and contract failures become step
/// data. On success a "<KIND> -> <template-key>" note is written to memory.
Trajectory execute_action(const TaskView& task, const ActionTemplate& action, const GraphState& graph,
                          const ToolRegistry& registry, MemoryStore& memory, const EpisodeConfig& config,
                          const OutcomeOracle& oracle);

/// enumerate_actions + select_action (draw `draw_index` of `stream`) + execute_action.
Trajectory execute_episode(const TaskView& task, const PolicyState& policy, const GraphState& graph,
                           const ToolRegistry& registry, MemoryStore& memory, const EpisodeConfig& config,
                           const RandomStream& stream, std::uint64_t draw_index, const OutcomeOracle& oracle);

Json to_canon(const Step& step);
void from_canon(const Json& j, Step& out);
Json to_canon(const UseTool& t);
void from_canon(const Json& j, UseTool& out);
Json to_canon(const ActionTemplate& action);
void from_canon(const Json& j, ActionTemplate& out);
Json to_canon(const Trajectory& t);
void from_canon(const Json& j, Trajectory& out);
Json to_canon(const PolicyState& p);
void from_canon(const Json& j, PolicyState& out);
Json to_canon(const MemoryNote& n);
void from_canon(const Json& j, MemoryNote& out);

}  // namespace skillaudit
