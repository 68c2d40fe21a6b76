#pragma once

// Deterministic task generator and the pure-function tool registry.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "skillaudit/canonical.h"
#include "skillaudit/random.h"
#include "skillaudit/value.h"

namespace skillaudit {

enum class TaskKind { kSum, kProduct, kReverse, kShout, kSumReport, kJoinLoud };

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view name);
const std::vector<TaskKind>& all_task_kinds();
bool is_composite_kind(TaskKind kind);

struct KindSchema {
  std::map<std::string, SemType> inputs;
  SemType output;
};
const KindSchema& kind_schema(TaskKind kind);

/// Ground truth for a kind. Inputs must match the kind's schema.
Value truth_fn(TaskKind kind, const ValueMap& inputs);

/// Coordinates that regenerate a task exactly.
struct TaskRef {
  TaskKind kind = TaskKind::kSum;
  std::uint64_t seed = 0;
  std::string path;
  std::uint64_t index = 0;

  bool operator==(const TaskRef&) const = default;
};

/// What the policy runtime is allowed to see: no ground truth.
struct TaskView {
  std::string id;
  TaskKind kind = TaskKind::kSum;
  ValueMap inputs;
  std::uint64_t episode_index = 0;

  bool operator==(const TaskView&) const = default;
};

struct Task {
  std::string id;
  TaskKind kind = TaskKind::kSum;
  ValueMap inputs;
  Value ground_truth;
  std::uint64_t episode_index = 0;
  TaskRef ref;

  TaskView view() const { return TaskView{id, kind, inputs, episode_index}; }
  bool operator==(const Task&) const = default;
};

struct CheckResult {
  std::string check_name;
  bool passed = false;
  std::string detail;

  static CheckResult pass(std::string name) { return {std::move(name), true, ""}; }
  static CheckResult fail(std::string name, std::string detail) {
    return {std::move(name), false, std::move(detail)};
  }
  bool operator==(const CheckResult&) const = default;
};

bool all_passed(const std::vector<CheckResult>& checks);

enum class ErrorKind {
  kUnknownTool,
  kSchemaViolation,
  kDomainGuard,
  kOutOfRange,
  kVersionMismatch,
  kPrecondition,
  kPostcondition,
  kContract,
  kUnknownSkill,
  kMissingBinding,
  kStepLimit,
};
std::string_view to_string(ErrorKind kind);

struct ToolError {
  ErrorKind kind = ErrorKind::kUnknownTool;
  std::string message;

  bool operator==(const ToolError&) const = default;
};

/// Result of a tool or skill invocation: a value or a loggable error.
using Outcome = std::variant<Value, ToolError>;

inline bool is_ok(const Outcome& o) { return std::holds_alternative<Value>(o); }

struct ToolParam {
  std::string name;
  SemType type = SemType::kInt;

  bool operator==(const ToolParam&) const = default;
};

// A failed domain guard on a tool may be recovered by re-running a designated
// fallback tool, provided the named guard predicate holds on the inputs.
struct FallbackRule {
  std::string guard;
  std::string tool;

  bool operator==(const FallbackRule&) const = default;
};

struct ToolSchema {
  std::string name;
  std::string version;
  std::vector<ToolParam> params;
  SemType output_type = SemType::kInt;
  std::optional<std::string> domain_guard;
  std::optional<FallbackRule> fallback;

  const ToolParam* param(std::string_view param_name) const;
  bool operator==(const ToolSchema&) const = default;
};

// Named, replayable guard predicates.
bool is_known_guard(std::string_view name);
/// Throws std::invalid_argument for an unknown guard.
bool eval_guard(std::string_view name, const ValueMap& values);

class ToolRegistry {
 public:
  using Impl = Outcome (*)(const ValueMap& args);

  /// add, mul, fast_add, rev, upper, concat, fmt.
  static ToolRegistry standard();

  const ToolSchema* find(std::string_view name) const;
  std::vector<const ToolSchema*> schemas() const;  // name order
  std::map<std::string, std::string> versions() const;

  /// Copy with one tool's version string replaced (regression fixtures).
  ToolRegistry with_version(const std::string& tool, std::string version) const;

  Outcome invoke(std::string_view name, const ValueMap& args) const;

 private:
  struct Entry {
    ToolSchema schema;
    Impl impl = nullptr;
  };
  std::map<std::string, Entry, std::less<>> entries_;
};

/// One result per declared param (presence and type), one for extra keys,
/// and one for the domain guard when the schema declares one.
std::vector<CheckResult> validate_args(const ToolSchema& schema, const ValueMap& args);

/// Validates, checks the guard, then runs the pure implementation. Every
/// failure is returned as a ToolError, never thrown.
Outcome invoke_tool(const ToolRegistry& registry, std::string_view name, const ValueMap& args);

inline constexpr std::string_view kVerifierVersion = "replay-verifier/1";
inline constexpr std::string_view kHarnessVersion = "suite-harness/1";

struct VersionStamp {
  std::string verifier_version;
  std::string harness_version;
  std::map<std::string, std::string> tool_schema_versions;

  bool operator==(const VersionStamp&) const = default;
};

// ---- task generation ----

/// Random task: ints uniform in [-99, 99], strings of length 1-8 over a-z.
Task gen_task(TaskKind kind, const RandomStream& stream, std::uint64_t draw_index);

/// Regenerates a task from its coordinates; "perturb/..." paths use the
/// boundary generator, every other path the random generator.
Task make_task(const TaskRef& ref);

std::string holdout_path(TaskKind kind, std::uint64_t seed);
std::string perturb_path(TaskKind kind, std::uint64_t seed);

std::vector<Task> holdout_suite(TaskKind kind, std::uint64_t seed, std::size_t n);

/// Boundary tasks: INT operands from {-99,-1,0,1,99}^2 (diagonal pairs first,
/// then a seeded order of the rest); STR operands of length 1 or 8, including
/// repeated-character strings.
std::vector<Task> perturb_suite(TaskKind kind, std::uint64_t seed, std::size_t n);

bool verify_outcome(const Task& task, const Value& answer);

class Environment {
 public:
  explicit Environment(ToolRegistry registry = ToolRegistry::standard()) : tools_(std::move(registry)) {}

  const ToolRegistry& tools() const { return tools_; }
  VersionStamp version_stamp() const;

 private:
  ToolRegistry tools_;
};

// ---- codecs ----
Json to_canon(TaskKind kind);
void from_canon(const Json& j, TaskKind& out);
Json to_canon(const TaskRef& ref);
void from_canon(const Json& j, TaskRef& out);
Json to_canon(const TaskView& view);
void from_canon(const Json& j, TaskView& out);
Json to_canon(const Task& task);
void from_canon(const Json& j, Task& out);
Json to_canon(const CheckResult& check);
void from_canon(const Json& j, CheckResult& out);
Json to_canon(ErrorKind kind);
void from_canon(const Json& j, ErrorKind& out);
Json to_canon(const ToolError& error);
void from_canon(const Json& j, ToolError& out);
Json to_canon(const Outcome& outcome);
void from_canon(const Json& j, Outcome& out);
Json to_canon(const ToolParam& param);
void from_canon(const Json& j, ToolParam& out);
Json to_canon(const FallbackRule& rule);
void from_canon(const Json& j, FallbackRule& out);
Json to_canon(const ToolSchema& schema);
void from_canon(const Json& j, ToolSchema& out);
Json to_canon(const VersionStamp& stamp);
void from_canon(const Json& j, VersionStamp& out);

}  // namespace skillaudit
