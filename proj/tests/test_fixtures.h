#pragma once

#include <map>
#include <string>
#include <utility>

#include "skillaudit/compiler.h"
#include "skillaudit/verifier.h"

namespace testutil {

using namespace skillaudit;

inline SkillProgram one_step(const std::string& tool, std::map<std::string, std::string> binding) {
  ProgStep step{tool, "1.0", {}};
  for (auto& [param, key] : binding) step.bindings.emplace(param, TaskInputRef{key});
  return SkillProgram{{step}};
}

inline SkillProgram add_program() { return one_step("add", {{"a", "a"}, {"b", "b"}}); }

inline SkillProgram add_fmt_program() {
  SkillProgram p = add_program();
  p.steps.push_back(ProgStep{"fmt", "1.0", {{"n", PriorOutputRef{0}}}});
  return p;
}

inline CandidateSkill make_candidate(const SkillProgram& program, TaskKind kind) {
  const auto registry = ToolRegistry::standard();
  CandidateSkill c;
  c.program = canonicalize(program, registry);
  c.interface = infer_interface(c.program, kind, registry);
  c.skill_id = skill_hash(c.program);
  c.source_trajectory = "fixture";
  return c;
}

inline SkillNode candidate_node(const CandidateSkill& c) {
  SkillNode node;
  node.skill_id = c.skill_id;
  node.program = c.program;
  node.interface = c.interface;
  node.status = SkillStatus::kCandidate;
  return node;
}

/// Verifies and promotes; returns the bundle.
inline EvidenceBundle verify_and_promote(SkillGraph& graph, AuditLog& log, const SkillProgram& program, TaskKind kind,
                                         std::uint64_t episode) {
  const CandidateSkill c = make_candidate(program, kind);
  EvidenceBundle bundle = verify_candidate(c, Environment(), VerifierConfig{}, log);
  graph.promote(candidate_node(c), bundle.bundle_hash, episode, log);
  return bundle;
}

inline TaskView view_of(TaskKind kind, ValueMap inputs) {
  TaskView v;
  v.id = "fixture";
  v.kind = kind;
  v.inputs = std::move(inputs);
  return v;
}

inline ValueMap ints(std::int64_t a, std::int64_t b) {
  return {{"a", Value::integer(a)}, {"b", Value::integer(b)}};
}

}  // namespace testutil

namespace testutil {

inline Task make_fixture_task(TaskKind kind, ValueMap inputs, std::uint64_t episode = 0) {
  Task t;
  t.id = "fixture-" + std::to_string(episode);
  t.kind = kind;
  t.inputs = std::move(inputs);
  t.ground_truth = truth_fn(kind, t.inputs);
  t.episode_index = episode;
  return t;
}

inline OutcomeOracle oracle_for(const Task& task) {
  return [task](const Value& answer) { return verify_outcome(task, answer); };
}

inline Trajectory run_action(const Task& task, const ActionTemplate& action, const GraphState& graph = {},
                             MemoryStore* memory = nullptr) {
  MemoryStore local;
  return execute_action(task.view(), action, graph, ToolRegistry::standard(), memory ? *memory : local,
                        EpisodeConfig{}, oracle_for(task));
}

inline UseTool use_tool(const std::string& tool, std::map<std::string, std::string> binding) {
  return UseTool{tool, std::move(binding)};
}

}  // namespace testutil
