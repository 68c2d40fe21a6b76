#include "skillaudit/policy.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace skillaudit {
namespace {

Value default_guess(SemType type) { return type == SemType::kInt ? Value::integer(0) : Value::string(""); }

// All injective assignments of `params` to type-matching task input keys,
// params in declared order, keys in map order.
void enumerate_bindings(const std::vector<ToolParam>& params, std::size_t at, const ValueMap& inputs,
                        std::map<std::string, std::string>& current, std::vector<std::map<std::string, std::string>>& out) {
  if (at == params.size()) {
    out.push_back(current);
    return;
  }
  for (const auto& [key, value] : inputs) {
    if (value.type() != params[at].type) continue;
    const bool used = std::any_of(current.begin(), current.end(), [&](const auto& kv) { return kv.second == key; });
    if (used) continue;
    current[params[at].name] = key;
    enumerate_bindings(params, at + 1, inputs, current, out);
    current.erase(params[at].name);
  }
}

std::vector<std::map<std::string, std::string>> bindings_for(const std::vector<ToolParam>& params,
                                                             const ValueMap& inputs) {
  std::vector<std::map<std::string, std::string>> out;
  std::map<std::string, std::string> current;
  enumerate_bindings(params, 0, inputs, current, out);
  return out;
}

ValueMap resolve(const std::map<std::string, std::string>& binding, const ValueMap& inputs) {
  ValueMap args;
  for (const auto& [param, key] : binding) {
    const auto it = inputs.find(key);
    if (it != inputs.end()) args[param] = it->second;
  }
  return args;
}

class Runner {
 public:
  Runner(const ToolRegistry& registry, std::size_t max_steps, std::vector<Step>& steps)
      : registry_(registry), max_steps_(max_steps), steps_(steps) {}

  bool has_budget() const { return steps_.size() < max_steps_; }

  // One tool call; a domain-guard failure whose fallback guard holds is
  // retried once with the designated fallback tool.
  std::optional<Value> call(const std::string& tool, const ValueMap& args, std::vector<CheckResult> contracts) {
    if (!has_budget()) return std::nullopt;
    const ToolSchema* schema = registry_.find(tool);
    std::vector<CheckResult> checks;
    if (schema) {
      checks = validate_args(*schema, args);
    } else {
      checks.push_back(CheckResult::fail("tool", "unknown tool '" + tool + "'"));
    }
    Outcome result = invoke_tool(registry_, tool, args);
    steps_.push_back(ToolCallStep{tool, schema ? schema->version : "", args, result, std::move(checks), contracts});
    if (is_ok(result)) return std::get<Value>(result);

    const auto& error = std::get<ToolError>(result);
    if (error.kind != ErrorKind::kDomainGuard || !schema || !schema->fallback) return std::nullopt;
    const FallbackRule& rule = *schema->fallback;
    if (!eval_guard(rule.guard, args)) return std::nullopt;
    contracts.push_back(CheckResult{"fallback_guard:" + rule.guard, true,
                                    "guard " + rule.guard + " holds; falling back from " + tool + " to " + rule.tool});
    return call(rule.tool, args, std::move(contracts));
  }

 private:
  const ToolRegistry& registry_;
  std::size_t max_steps_;
  std::vector<Step>& steps_;
};

}  // namespace

Digest template_key(const ActionTemplate& action) { return hash_record(action); }

std::size_t action_step_count(const Trajectory& trajectory) {
  return static_cast<std::size_t>(std::count_if(trajectory.steps.begin(), trajectory.steps.end(), [](const Step& s) {
    return !std::holds_alternative<MemoryWriteStep>(s);
  }));
}

std::string PolicyState::key(TaskKind kind, const Digest& template_hash) {
  return std::string(to_string(kind)) + "/" + template_hash.hex();
}

std::string PolicyState::key(TaskKind kind, const ActionTemplate& action) { return key(kind, template_key(action)); }

double PolicyState::pref(TaskKind kind, const ActionTemplate& action) const {
  const auto it = prefs.find(key(kind, action));
  return it == prefs.end() ? 0.0 : it->second;
}

std::vector<ActionTemplate> enumerate_actions(const TaskView& task, const GraphState& graph,
                                              const ToolRegistry& registry) {
  const KindSchema& kind = kind_schema(task.kind);
  std::vector<ActionTemplate> out;
  out.emplace_back(Guess{default_guess(kind.output)});

  std::vector<UseTool> tools;
  for (const ToolSchema* schema : registry.schemas()) {
    for (auto& binding : bindings_for(schema->params, task.inputs)) {
      tools.push_back(UseTool{schema->name, std::move(binding)});
    }
  }
  for (const auto& t : tools) out.emplace_back(t);

  if (is_composite_kind(task.kind)) {
    for (const auto& first : tools) {
      const SemType carried = registry.find(first.tool)->output_type;
      for (const ToolSchema* second : registry.schemas()) {
        if (second->output_type != kind.output) continue;
        for (const auto& prior : second->params) {
          if (prior.type != carried) continue;
          std::vector<ToolParam> rest;
          for (const auto& p : second->params) {
            if (p.name != prior.name) rest.push_back(p);
          }
          for (auto& binding : bindings_for(rest, task.inputs)) {
            out.emplace_back(Compose{first, UseTool{second->name, std::move(binding)}, prior.name});
          }
        }
      }
    }
  }

  for (const auto& node : applicable_skills(graph, task)) out.emplace_back(UseSkill{node.skill_id});
  return out;
}

const ActionTemplate& select_action(const PolicyState& policy, TaskKind kind,
                                    const std::vector<ActionTemplate>& templates, const RandomStream& stream,
                                    std::uint64_t draw_index, double epsilon) {
  if (templates.empty()) throw std::invalid_argument("select_action needs at least one template");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  Draw draw = stream.draw(draw_index);
  if (draw.uniform_real() < epsilon) return templates[draw.index_below(templates.size())];
  std::size_t best = 0;
  double best_pref = policy.pref(kind, templates[0]);
  for (std::size_t i = 1; i < templates.size(); ++i) {
    const double p = policy.pref(kind, templates[i]);
    if (p > best_pref) {
      best = i;
      best_pref = p;
    }
  }
  return templates[best];
}

void update_policy(PolicyState& policy, TaskKind kind, const ActionTemplate& action, double reward, double alpha) {
  if (!std::isfinite(reward)) throw std::invalid_argument("reward must be finite");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const std::string k = PolicyState::key(kind, action);
  double& pref = policy.prefs[k];
  pref += alpha * (reward - pref);
  ++policy.visit_counts[k];
}

MemoryStore::MemoryStore(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("memory capacity must be positive");
}

std::optional<std::uint64_t> MemoryStore::write(TaskKind kind, std::string text, std::uint64_t episode) {
  if (text.size() > kMaxNoteChars) throw std::invalid_argument("memory note exceeds 128 characters");
  for (auto& note : notes_) {
    if (note.kind == kind && note.text == text) {
      note.last_used = episode;
      return std::nullopt;
    }
  }
  std::optional<std::uint64_t> evicted;
  if (notes_.size() >= capacity_) {
    const auto lru = std::min_element(notes_.begin(), notes_.end(), [](const MemoryNote& a, const MemoryNote& b) {
      return a.last_used != b.last_used ? a.last_used < b.last_used : a.id < b.id;
    });
    evicted = lru->id;
    notes_.erase(lru);
  }
  notes_.push_back(MemoryNote{next_id_++, kind, std::move(text), episode});
  return evicted;
}

std::string memory_hint(const MemoryStore& memory, TaskKind kind) {
  std::vector<const MemoryNote*> matching;
  for (const auto& note : memory.notes()) {
    if (note.kind == kind) matching.push_back(&note);
  }
  std::sort(matching.begin(), matching.end(), [](const MemoryNote* a, const MemoryNote* b) {
    return a->last_used != b->last_used ? a->last_used > b->last_used : a->id > b->id;
  });
  std::string hint;
  for (const MemoryNote* note : matching) {
    if (!hint.empty()) hint += '\n';
    hint += note->text;
    if (hint.size() >= kMaxHintChars) break;
  }
  if (hint.size() > kMaxHintChars) hint.resize(kMaxHintChars);
  return hint;
}

Trajectory execute_action(const TaskView& task, const ActionTemplate& action, const GraphState& graph,
                          const ToolRegistry& registry, MemoryStore& memory, const EpisodeConfig& config,
                          const OutcomeOracle& oracle) {
  Trajectory traj;
  traj.id = "episode-" + std::to_string(task.episode_index);
  traj.task_id = task.id;
  traj.episode_index = task.episode_index;
  traj.kind = task.kind;
  traj.action = action;
  const std::string hint = memory_hint(memory, task.kind);
  traj.context_chars = canonical_encode(task).size() + hint.size();

  Runner runner(registry, config.max_steps, traj.steps);
  if (const auto* guess = std::get_if<Guess>(&action)) {
    if (runner.has_budget()) {
      traj.steps.emplace_back(DirectAnswerStep{guess->value});
      traj.final_answer = guess->value;
    }
  } else if (const auto* use = std::get_if<UseTool>(&action)) {
    traj.final_answer = runner.call(use->tool, resolve(use->binding, task.inputs), {});
  } else if (const auto* compose = std::get_if<Compose>(&action)) {
    const auto first = runner.call(compose->first.tool, resolve(compose->first.binding, task.inputs), {});
    if (first) {
      ValueMap args = resolve(compose->second.binding, task.inputs);
      args[compose->prior_param] = *first;
      std::vector<CheckResult> contracts;
      const ToolSchema* schema = registry.find(compose->second.tool);
      const ToolParam* param = schema ? schema->param(compose->prior_param) : nullptr;
      contracts.push_back(check_type_contract("contract:" + compose->prior_param,
                                              param ? param->type : first->type(), *first));
      traj.final_answer = runner.call(compose->second.tool, args, std::move(contracts));
    }
  } else if (runner.has_budget()) {
    const Digest& id = std::get<UseSkill>(action).skill_id;
    SkillCallStep call;
    call.skill_id = id;
    const SkillNode* node = graph.find(id);
    if (node == nullptr || node->status != SkillStatus::kPromoted) {
      call.result = ToolError{ErrorKind::kUnknownSkill, "skill " + id.short_hex() + " is not promoted"};
    } else {
      for (const auto& [key, type] : node->interface.required_inputs) {
        if (const auto it = task.inputs.find(key); it != task.inputs.end()) call.inputs[key] = it->second;
      }
      const CheckResult pre = check_interface(node->interface, task);
      call.pre_ok = pre.passed;
      if (!pre.passed) {
        call.result = ToolError{ErrorKind::kPrecondition, pre.detail};
      } else {
        ProgramRun run = run_program(registry, node->program, call.inputs);
        call.internal_contract_checks = std::move(run.schema_checks);
        for (auto& c : run.contract_checks) call.internal_contract_checks.push_back(std::move(c));
        call.result = run.result;
        if (is_ok(run.result)) {
          call.post_ok = std::get<Value>(run.result).type() == node->interface.output_type;
          if (call.post_ok) {
            traj.final_answer = std::get<Value>(run.result);
          } else {
            call.result = ToolError{ErrorKind::kPostcondition, "skill output has the wrong type"};
          }
        }
      }
    }
    traj.steps.emplace_back(std::move(call));
  }

  traj.outcome_correct = traj.final_answer.has_value() && oracle(*traj.final_answer);
  if (traj.outcome_correct) {
    std::string note = std::string(to_string(task.kind)) + " -> " + template_key(action).hex();
    const auto evicted = memory.write(task.kind, note, task.episode_index);
    traj.steps.emplace_back(MemoryWriteStep{std::move(note), evicted});
  }
  return traj;
}

Trajectory execute_episode(const TaskView& task, const PolicyState& policy, const GraphState& graph,
                           const ToolRegistry& registry, MemoryStore& memory, const EpisodeConfig& config,
                           const RandomStream& stream, std::uint64_t draw_index, const OutcomeOracle& oracle) {
  const auto templates = enumerate_actions(task, graph, registry);
  const ActionTemplate& action = select_action(policy, task.kind, templates, stream, draw_index, config.epsilon);
  return execute_action(task, action, graph, registry, memory, config, oracle);
}

// ---- codecs ----

Json to_canon(const Step& step) {
  Json j = Json::object();
  if (const auto* t = std::get_if<ToolCallStep>(&step)) {
    Json body = Json::object();
    body["tool"] = t->tool;
    body["version"] = t->version;
    body["args"] = to_canon(t->args);
    body["result"] = to_canon(t->result);
    body["schema_checks"] = to_canon(t->schema_checks);
    body["contract_checks"] = to_canon(t->contract_checks);
    j["tool_call"] = std::move(body);
  } else if (const auto* s = std::get_if<SkillCallStep>(&step)) {
    Json body = Json::object();
    body["skill_id"] = to_canon(s->skill_id);
    body["inputs"] = to_canon(s->inputs);
    body["result"] = to_canon(s->result);
    body["pre_ok"] = s->pre_ok;
    body["post_ok"] = s->post_ok;
    body["internal_contract_checks"] = to_canon(s->internal_contract_checks);
    j["skill_call"] = std::move(body);
  } else if (const auto* d = std::get_if<DirectAnswerStep>(&step)) {
    Json body = Json::object();
    body["answer"] = to_canon(d->answer);
    j["direct_answer"] = std::move(body);
  } else {
    const auto& m = std::get<MemoryWriteStep>(step);
    Json body = Json::object();
    body["note"] = m.note;
    body["evicted"] = to_canon(m.evicted);
    j["memory_write"] = std::move(body);
  }
  return j;
}

void from_canon(const Json& j, Step& out) {
  if (!j.is_object() || j.size() != 1) throw DecodeError("", "expected a single-variant step");
  const auto& [tag, body] = *j.items().begin();
  if (tag == "tool_call") {
    ToolCallStep t;
    read_field(body, "tool", t.tool);
    read_field(body, "version", t.version);
    read_field(body, "args", t.args);
    read_field(body, "result", t.result);
    read_field(body, "schema_checks", t.schema_checks);
    read_field(body, "contract_checks", t.contract_checks);
    out = std::move(t);
  } else if (tag == "skill_call") {
    SkillCallStep s;
    read_field(body, "skill_id", s.skill_id);
    read_field(body, "inputs", s.inputs);
    read_field(body, "result", s.result);
    read_field(body, "pre_ok", s.pre_ok);
    read_field(body, "post_ok", s.post_ok);
    read_field(body, "internal_contract_checks", s.internal_contract_checks);
    out = std::move(s);
  } else if (tag == "direct_answer") {
    DirectAnswerStep d;
    read_field(body, "answer", d.answer);
    out = d;
  } else if (tag == "memory_write") {
    MemoryWriteStep m;
    read_field(body, "note", m.note);
    read_field(body, "evicted", m.evicted);
    out = std::move(m);
  } else {
    throw DecodeError("", "unknown step kind '" + tag + "'");
  }
}

Json to_canon(const UseTool& t) {
  Json j = Json::object();
  j["tool"] = t.tool;
  j["binding"] = to_canon(t.binding);
  return j;
}

void from_canon(const Json& j, UseTool& out) {
  read_field(j, "tool", out.tool);
  read_field(j, "binding", out.binding);
}

Json to_canon(const ActionTemplate& action) {
  Json j = Json::object();
  if (const auto* g = std::get_if<Guess>(&action)) {
    Json body = Json::object();
    body["value"] = to_canon(g->value);
    j["guess"] = std::move(body);
  } else if (const auto* t = std::get_if<UseTool>(&action)) {
    j["use_tool"] = to_canon(*t);
  } else if (const auto* c = std::get_if<Compose>(&action)) {
    Json body = Json::object();
    body["first"] = to_canon(c->first);
    body["second"] = to_canon(c->second);
    body["prior_param"] = c->prior_param;
    j["compose"] = std::move(body);
  } else {
    Json body = Json::object();
    body["skill_id"] = to_canon(std::get<UseSkill>(action).skill_id);
    j["use_skill"] = std::move(body);
  }
  return j;
}

void from_canon(const Json& j, ActionTemplate& out) {
  if (!j.is_object() || j.size() != 1) throw DecodeError("", "expected a single-variant action template");
  const auto& [tag, body] = *j.items().begin();
  if (tag == "guess") {
    Guess g;
    read_field(body, "value", g.value);
    out = g;
  } else if (tag == "use_tool") {
    UseTool t;
    from_canon(body, t);
    out = std::move(t);
  } else if (tag == "compose") {
    Compose c;
    read_field(body, "first", c.first);
    read_field(body, "second", c.second);
    read_field(body, "prior_param", c.prior_param);
    out = std::move(c);
  } else if (tag == "use_skill") {
    UseSkill s;
    read_field(body, "skill_id", s.skill_id);
    out = s;
  } else {
    throw DecodeError("", "unknown action template '" + tag + "'");
  }
}

Json to_canon(const Trajectory& t) {
  Json j = Json::object();
  j["id"] = t.id;
  j["task_id"] = t.task_id;
  j["episode_index"] = t.episode_index;
  j["kind"] = to_canon(t.kind);
  j["action"] = to_canon(t.action);
  j["steps"] = to_canon(t.steps);
  j["final_answer"] = to_canon(t.final_answer);
  j["outcome_correct"] = t.outcome_correct;
  j["context_chars"] = t.context_chars;
  return j;
}

void from_canon(const Json& j, Trajectory& out) {
  read_field(j, "id", out.id);
  read_field(j, "task_id", out.task_id);
  read_field(j, "episode_index", out.episode_index);
  read_field(j, "kind", out.kind);
  read_field(j, "action", out.action);
  read_field(j, "steps", out.steps);
  read_field(j, "final_answer", out.final_answer);
  read_field(j, "outcome_correct", out.outcome_correct);
  read_field(j, "context_chars", out.context_chars);
}

Json to_canon(const PolicyState& p) {
  Json j = Json::object();
  j["prefs"] = to_canon(p.prefs);
  j["visit_counts"] = to_canon(p.visit_counts);
  return j;
}

void from_canon(const Json& j, PolicyState& out) {
  read_field(j, "prefs", out.prefs);
  read_field(j, "visit_counts", out.visit_counts);
}

Json to_canon(const MemoryNote& n) {
  Json j = Json::object();
  j["id"] = n.id;
  j["kind"] = to_canon(n.kind);
  j["text"] = n.text;
  j["last_used"] = n.last_used;
  return j;
}

void from_canon(const Json& j, MemoryNote& out) {
  read_field(j, "id", out.id);
  read_field(j, "kind", out.kind);
  read_field(j, "text", out.text);
  read_field(j, "last_used", out.last_used);
}

}  // namespace skillaudit
