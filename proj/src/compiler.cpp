#include "skillaudit/compiler.h"

#include <algorithm>

namespace skillaudit {

std::optional<std::map<std::string, BindingSource>> infer_bindings(const ValueMap& args, const ValueMap& task_inputs,
                                                                   const std::vector<Value>& prior_outputs) {
  std::map<std::string, BindingSource> out;
  for (const auto& [param, value] : args) {
    std::optional<BindingSource> source;
    for (std::size_t i = prior_outputs.size(); i-- > 0;) {
      if (prior_outputs[i] == value) {
        source = PriorOutputRef{i};
        break;
      }
    }
    if (!source) {
      for (const auto& [key, input] : task_inputs) {  // map order is lexicographic
        if (input == value) {
          source = TaskInputRef{key};
          break;
        }
      }
    }
    if (!source) return std::nullopt;
    out.emplace(param, *source);
  }
  return out;
}

SkillInterface infer_interface(const SkillProgram& program, TaskKind kind, const ToolRegistry& registry) {
  check_well_formed(program);
  SkillInterface iface;
  const KindSchema& schema = kind_schema(kind);
  for (const auto& step : program.steps) {
    for (const auto& [param, source] : step.bindings) {
      const auto* input = std::get_if<TaskInputRef>(&source);
      if (input == nullptr) continue;
      const auto it = schema.inputs.find(input->key);
      if (it != schema.inputs.end()) iface.required_inputs[input->key] = it->second;
    }
  }
  const ToolSchema* last = registry.find(program.steps.back().tool);
  iface.output_type = last ? last->output_type : schema.output;
  iface.applicable_kinds = {kind};
  return iface;
}

SkillProgram canonicalize(SkillProgram program, const ToolRegistry& registry) {
  for (auto& step : program.steps) {
    if (const ToolSchema* schema = registry.find(step.tool)) step.version = schema->version;
  }
  return program;
}

std::vector<CandidateSkill> extract_candidates(const Trajectory& trajectory, const TaskView& task,
                                               const ToolRegistry& registry) {
  if (!trajectory.outcome_correct || !trajectory.final_answer) return {};
  std::vector<const ToolCallStep*> calls;
  for (const auto& step : trajectory.steps) {
    if (std::holds_alternative<SkillCallStep>(step) || std::holds_alternative<DirectAnswerStep>(step)) return {};
    const auto* call = std::get_if<ToolCallStep>(&step);
    if (call && is_ok(call->result) && all_passed(call->schema_checks)) calls.push_back(call);
  }
  if (calls.empty() || calls.size() > kMaxProgramSteps) return {};
  if (std::get<Value>(calls.back()->result) != *trajectory.final_answer) return {};

  SkillProgram program;
  std::vector<Value> priors;
  bool chained = true;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    auto bindings = infer_bindings(calls[i]->args, task.inputs, priors);
    if (!bindings) return {};
    const bool consumes = std::any_of(bindings->begin(), bindings->end(), [](const auto& kv) {
      return std::holds_alternative<PriorOutputRef>(kv.second);
    });
    if (i > 0 && !consumes) chained = false;
    program.steps.push_back(ProgStep{calls[i]->tool, calls[i]->version, std::move(*bindings)});
    priors.push_back(std::get<Value>(calls[i]->result));
  }
  if (!chained) {
    // Only the final call produced the answer; keep it if it stands alone.
    auto bindings = infer_bindings(calls.back()->args, task.inputs, {});
    if (!bindings) return {};
    program.steps = {ProgStep{calls.back()->tool, calls.back()->version, std::move(*bindings)}};
  }
  program = canonicalize(std::move(program), registry);
  try {
    check_well_formed(program);
  } catch (const std::invalid_argument&) {
    return {};
  }

  // Replay fidelity on the source task.
  const ProgramRun run = run_program(registry, program, task.inputs);
  if (!is_ok(run.result) || std::get<Value>(run.result) != *trajectory.final_answer) return {};

  CandidateSkill candidate;
  candidate.interface = infer_interface(program, task.kind, registry);
  candidate.skill_id = skill_hash(program);
  candidate.program = std::move(program);
  candidate.source_trajectory = trajectory.id;
  return {std::move(candidate)};
}

Json to_canon(const CandidateSkill& c) {
  Json j = Json::object();
  j["program"] = to_canon(c.program);
  j["interface"] = to_canon(c.interface);
  j["source_trajectory"] = c.source_trajectory;
  j["skill_id"] = to_canon(c.skill_id);
  return j;
}

void from_canon(const Json& j, CandidateSkill& out) {
  read_field(j, "program", out.program);
  read_field(j, "interface", out.interface);
  read_field(j, "source_trajectory", out.source_trajectory);
  read_field(j, "skill_id", out.skill_id);
}

}  // namespace skillaudit
