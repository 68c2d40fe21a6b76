#pragma once

// Turns successful trajectories into canonical candidate skills.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skillaudit/policy.h"
#include "skillaudit/skill_program.h"

namespace skillaudit {

struct CandidateSkill {
  SkillProgram program;
  SkillInterface interface;
  std::string source_trajectory;
  Digest skill_id;

  bool operator==(const CandidateSkill&) const = default;
};

/// Per param: the most recent prior output equal to the argument, else the
/// lexicographically smallest task-input key holding an equal value.
/// nullopt when some argument matches nothing.
std::optional<std::map<std::string, BindingSource>> infer_bindings(const ValueMap& args, const ValueMap& task_inputs,
                                                                   const std::vector<Value>& prior_outputs);

SkillInterface infer_interface(const SkillProgram& program, TaskKind kind, const ToolRegistry& registry);

/// Pins every step's version to the registry's current one.
SkillProgram canonicalize(SkillProgram program, const ToolRegistry& registry);

/// At most one candidate: a single schema-valid ToolCall, or a chain of 2-3
/// where each later call consumes an earlier output. SkillCall and
/// DirectAnswer successes, and failed trajectories, yield nothing.
std::vector<CandidateSkill> extract_candidates(const Trajectory& trajectory, const TaskView& task,
                                               const ToolRegistry& registry);

Json to_canon(const CandidateSkill& c);
void from_canon(const Json& j, CandidateSkill& out);

}  // namespace skillaudit
