#include "skillaudit/skill_program.h"

#include <stdexcept>

namespace skillaudit {

void check_well_formed(const SkillProgram& program) {
  if (program.steps.empty() || program.steps.size() > kMaxProgramSteps) {
    throw std::invalid_argument("program must have 1 to " + std::to_string(kMaxProgramSteps) + " steps");
  }
  for (std::size_t i = 0; i < program.steps.size(); ++i) {
    const ProgStep& step = program.steps[i];
    if (step.tool.empty()) throw std::invalid_argument("step " + std::to_string(i) + " has no tool");
    if (step.version.empty()) {
      throw std::invalid_argument("step " + std::to_string(i) + " has no pinned version");
    }
    if (step.bindings.empty()) throw std::invalid_argument("step " + std::to_string(i) + " has no bindings");
    for (const auto& [param, source] : step.bindings) {
      if (const auto* prior = std::get_if<PriorOutputRef>(&source); prior && prior->step_index >= i) {
        throw std::invalid_argument("step " + std::to_string(i) + " param '" + param +
                                    "' references a non-prior output");
      }
      if (const auto* input = std::get_if<TaskInputRef>(&source); input && input->key.empty()) {
        throw std::invalid_argument("step " + std::to_string(i) + " param '" + param + "' has an empty key");
      }
    }
  }
}

Digest skill_hash(const SkillProgram& program) {
  check_well_formed(program);
  return hash_record(program);
}

CheckResult check_interface(const SkillInterface& iface, const TaskView& task) {
  if (!iface.applicable_kinds.contains(task.kind)) {
    return CheckResult::fail("precondition", "task kind " + std::string(to_string(task.kind)) +
                                                 " not in applicable kinds");
  }
  for (const auto& [key, type] : iface.required_inputs) {
    const auto it = task.inputs.find(key);
    if (it == task.inputs.end()) return CheckResult::fail("precondition", "missing input '" + key + "'");
    if (it->second.type() != type) {
      return CheckResult::fail("precondition", "input '" + key + "' expects " + std::string(to_string(type)));
    }
  }
  return CheckResult::pass("precondition");
}

CheckResult check_type_contract(const std::string& name, SemType expected, const Value& produced) {
  if (produced.type() == expected) return CheckResult::pass(name);
  return CheckResult::fail(name, "produced " + std::string(to_string(produced.type())) + " where " +
                                     std::string(to_string(expected)) + " is required");
}

ProgramRun run_program(const ToolRegistry& registry, const SkillProgram& program, const ValueMap& inputs) {
  ProgramRun run;
  for (std::size_t i = 0; i < program.steps.size(); ++i) {
    const ProgStep& step = program.steps[i];
    const std::string where = "step" + std::to_string(i);
    const ToolSchema* schema = registry.find(step.tool);
    if (schema == nullptr) {
      run.schema_checks.push_back(CheckResult::fail(where + ":tool", "unknown tool '" + step.tool + "'"));
      run.result = ToolError{ErrorKind::kUnknownTool, "unknown tool '" + step.tool + "'"};
      return run;
    }
    if (schema->version != step.version) {
      const std::string msg = step.tool + " pinned at " + step.version + ", registry has " + schema->version;
      run.schema_checks.push_back(CheckResult::fail(where + ":version", msg));
      run.result = ToolError{ErrorKind::kVersionMismatch, msg};
      return run;
    }
    run.schema_checks.push_back(CheckResult::pass(where + ":version"));

    ValueMap args;
    for (const auto& [param, source] : step.bindings) {
      if (const auto* input = std::get_if<TaskInputRef>(&source)) {
        const auto it = inputs.find(input->key);
        if (it == inputs.end()) {
          const std::string msg = "task input '" + input->key + "' is absent";
          run.schema_checks.push_back(CheckResult::fail(where + ":binding:" + param, msg));
          run.result = ToolError{ErrorKind::kMissingBinding, msg};
          return run;
        }
        args[param] = it->second;
      } else {
        const std::size_t from = std::get<PriorOutputRef>(source).step_index;
        if (from >= run.outputs.size()) {
          run.result = ToolError{ErrorKind::kMissingBinding, "prior output " + std::to_string(from) + " is absent"};
          return run;
        }
        const Value& produced = run.outputs[from];
        const ToolParam* p = schema->param(param);
        auto check = check_type_contract(where + ":contract:" + param, p ? p->type : produced.type(), produced);
        const bool ok = check.passed;
        run.contract_checks.push_back(std::move(check));
        if (!ok) {
          run.result = ToolError{ErrorKind::kContract, "step " + std::to_string(i) + " param '" + param +
                                                           "' receives a value of the wrong type"};
          return run;
        }
        args[param] = produced;
      }
    }
    for (auto& check : validate_args(*schema, args)) {
      check.check_name = where + ":" + check.check_name;
      run.schema_checks.push_back(std::move(check));
    }
    run.result = invoke_tool(registry, step.tool, args);
    if (!is_ok(run.result)) return run;
    run.outputs.push_back(std::get<Value>(run.result));
  }
  return run;
}

Json to_canon(const BindingSource& source) {
  Json j = Json::object();
  if (const auto* input = std::get_if<TaskInputRef>(&source)) {
    j["task_input"] = input->key;
  } else {
    j["prior_output"] = static_cast<std::uint64_t>(std::get<PriorOutputRef>(source).step_index);
  }
  return j;
}

void from_canon(const Json& j, BindingSource& out) {
  if (!j.is_object() || j.size() != 1) throw DecodeError("", "expected binding source");
  if (j.contains("task_input")) {
    out = TaskInputRef{read_field<std::string>(j, "task_input")};
  } else if (j.contains("prior_output")) {
    out = PriorOutputRef{static_cast<std::size_t>(read_field<std::uint64_t>(j, "prior_output"))};
  } else {
    throw DecodeError("", "unknown binding source");
  }
}

Json to_canon(const ProgStep& step) {
  Json j = Json::object();
  j["tool"] = step.tool;
  j["version"] = step.version;
  j["bindings"] = to_canon(step.bindings);
  return j;
}

void from_canon(const Json& j, ProgStep& out) {
  read_field(j, "tool", out.tool);
  read_field(j, "version", out.version);
  read_field(j, "bindings", out.bindings);
}

Json to_canon(const SkillProgram& program) {
  Json j = Json::object();
  j["steps"] = to_canon(program.steps);
  return j;
}

void from_canon(const Json& j, SkillProgram& out) { read_field(j, "steps", out.steps); }

Json to_canon(const SkillInterface& iface) {
  Json j = Json::object();
  j["required_inputs"] = to_canon(iface.required_inputs);
  j["output_type"] = to_canon(iface.output_type);
  // Kinds in lexicographic name order.
  std::set<std::string> names;
  for (const auto kind : iface.applicable_kinds) names.emplace(to_string(kind));
  j["applicable_kinds"] = Json(std::vector<std::string>(names.begin(), names.end()));
  return j;
}

void from_canon(const Json& j, SkillInterface& out) {
  read_field(j, "required_inputs", out.required_inputs);
  read_field(j, "output_type", out.output_type);
  std::vector<TaskKind> kinds;
  read_field(j, "applicable_kinds", kinds);
  out.applicable_kinds = std::set<TaskKind>(kinds.begin(), kinds.end());
}

}  // namespace skillaudit
