#pragma once

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "skillaudit/digest.h"
#include "skillaudit/environment.h"

namespace skillaudit {

struct TaskInputRef {
  std::string key;
  bool operator==(const TaskInputRef&) const = default;
};

struct PriorOutputRef {
  std::size_t step_index = 0;
  bool operator==(const PriorOutputRef&) const = default;
};

using BindingSource = std::variant<TaskInputRef, PriorOutputRef>;

struct ProgStep {
  std::string tool;
  std::string version;
  std::map<std::string, BindingSource> bindings;  // param -> source

  bool operator==(const ProgStep&) const = default;
};

/// Straight-line tool program. PriorOutput references point strictly
/// backwards; length is 1 to 3 steps.
struct SkillProgram {
  std::vector<ProgStep> steps;

  bool operator==(const SkillProgram&) const = default;
};

inline constexpr std::size_t kMaxProgramSteps = 3;

struct SkillInterface {
  std::map<std::string, SemType> required_inputs;
  SemType output_type = SemType::kInt;
  std::set<TaskKind> applicable_kinds;

  bool operator==(const SkillInterface&) const = default;
};

/// Throws std::invalid_argument describing the first structural violation.
void check_well_formed(const SkillProgram& program);

/// hash_bytes(canonical_encode(program)); rejects ill-formed programs.
Digest skill_hash(const SkillProgram& program);

/// Precondition: kind listed, every required input present with its type.
CheckResult check_interface(const SkillInterface& iface, const TaskView& task);

/// Type check of a value flowing from one step into a consumer parameter.
CheckResult check_type_contract(const std::string& name, SemType expected, const Value& produced);

struct ProgramRun {
  Outcome result = ToolError{ErrorKind::kMissingBinding, "empty program"};
  std::vector<Value> outputs;  // one per completed step
  std::vector<CheckResult> schema_checks;
  std::vector<CheckResult> contract_checks;
};

/// Executes a program against task inputs. Each step's pinned version must
/// match the registry; bindings resolve from the inputs and prior outputs;
/// the first failing step ends the run with its error as the result.
ProgramRun run_program(const ToolRegistry& registry, const SkillProgram& program, const ValueMap& inputs);

Json to_canon(const BindingSource& source);
void from_canon(const Json& j, BindingSource& out);
Json to_canon(const ProgStep& step);
void from_canon(const Json& j, ProgStep& out);
Json to_canon(const SkillProgram& program);
void from_canon(const Json& j, SkillProgram& out);
Json to_canon(const SkillInterface& iface);
void from_canon(const Json& j, SkillInterface& out);

}  // namespace skillaudit
