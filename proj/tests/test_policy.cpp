#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "test_fixtures.h"
#include "test_util.h"

using namespace skillaudit;
using namespace testutil;

namespace {

bool contains(const std::vector<ActionTemplate>& list, const ActionTemplate& a) {
  return std::find(list.begin(), list.end(), a) != list.end();
}

std::vector<std::string> check_names(const ToolCallStep& step) {
  std::vector<std::string> names;
  for (const auto& c : step.contract_checks) names.push_back(c.check_name);
  return names;
}

}  // namespace

TEST_CASE("SUM enumeration over an empty graph") {
  const auto actions = enumerate_actions(view_of(TaskKind::kSum, ints(3, 4)), {}, ToolRegistry::standard());
  REQUIRE_FALSE(actions.empty());
  CHECK(actions.front() == ActionTemplate{Guess{Value::integer(0)}});
  CHECK(contains(actions, use_tool("add", {{"a", "a"}, {"b", "b"}})));
  CHECK(contains(actions, use_tool("add", {{"a", "b"}, {"b", "a"}})));
  CHECK(contains(actions, use_tool("mul", {{"a", "a"}, {"b", "b"}})));
  CHECK(contains(actions, use_tool("fast_add", {{"a", "a"}, {"b", "b"}})));
  for (const auto& a : actions) CHECK_FALSE(std::holds_alternative<Compose>(a));
  CHECK(actions == enumerate_actions(view_of(TaskKind::kSum, ints(3, 4)), {}, ToolRegistry::standard()));
}

TEST_CASE("REVERSE enumeration has no integer tools") {
  const auto actions = enumerate_actions(view_of(TaskKind::kReverse, {{"s", Value::string("abc")}}), {},
                                         ToolRegistry::standard());
  for (const auto& a : actions) {
    if (const auto* t = std::get_if<UseTool>(&a)) {
      CHECK(t->tool != "add");
      CHECK(t->tool != "mul");
      CHECK(t->tool != "fast_add");
    }
  }
  CHECK(contains(actions, use_tool("rev", {{"s", "s"}})));
}

TEST_CASE("composite kinds enumerate compositions") {
  const auto actions = enumerate_actions(view_of(TaskKind::kSumReport, ints(3, 4)), {}, ToolRegistry::standard());
  const Compose add_fmt{use_tool("add", {{"a", "a"}, {"b", "b"}}), use_tool("fmt", {}), "n"};
  CHECK(contains(actions, add_fmt));
}

TEST_CASE("promoted skills are appended") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  const auto b = verify_and_promote(graph, log, add_program(), TaskKind::kSum, 0);
  const auto actions = enumerate_actions(view_of(TaskKind::kSum, ints(3, 4)), *graph.snapshot(),
                                         ToolRegistry::standard());
  CHECK(actions.back() == ActionTemplate{UseSkill{b.skill_id}});
  const auto without = enumerate_actions(view_of(TaskKind::kSum, ints(3, 4)), {}, ToolRegistry::standard());
  CHECK(actions.size() == without.size() + 1);
}

TEST_CASE("greedy selection and tie-break") {
  const auto actions = enumerate_actions(view_of(TaskKind::kSum, ints(3, 4)), {}, ToolRegistry::standard());
  const RandomStream stream(0, "policy/select");
  PolicyState policy;
  CHECK(&select_action(policy, TaskKind::kSum, actions, stream, 0, 0.0) == &actions.front());
  update_policy(policy, TaskKind::kSum, actions[3], 1.0, 1.0);
  CHECK(select_action(policy, TaskKind::kSum, actions, stream, 0, 0.0) == actions[3]);
  // Preferences for one kind do not leak into another.
  CHECK(&select_action(policy, TaskKind::kProduct, actions, stream, 0, 0.0) == &actions.front());
}

TEST_CASE("exploration depends only on the named draw") {
  const auto actions = enumerate_actions(view_of(TaskKind::kSum, ints(3, 4)), {}, ToolRegistry::standard());
  const RandomStream stream(5, "policy/select");
  PolicyState a;
  PolicyState b;
  update_policy(b, TaskKind::kSum, actions[1], 1.0, 1.0);
  std::size_t distinct = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto& x = select_action(a, TaskKind::kSum, actions, stream, i, 1.0);
    const auto& y = select_action(b, TaskKind::kSum, actions, stream, i, 1.0);
    CHECK(x == y);
    distinct += &x != &actions.front() ? 1 : 0;
  }
  CHECK(distinct > 0);
}

TEST_CASE("update rule") {
  const ActionTemplate g = Guess{Value::integer(0)};
  PolicyState p;
  update_policy(p, TaskKind::kSum, g, 1.0, 0.1);
  CHECK(p.pref(TaskKind::kSum, g) == doctest::Approx(0.1).epsilon(1e-12));
  PolicyState q;
  update_policy(q, TaskKind::kSum, g, 0.0, 0.1);
  CHECK(q.pref(TaskKind::kSum, g) == 0.0);

  PolicyState r;
  double prev = 0.0;
  for (int i = 0; i < 200; ++i) {
    update_policy(r, TaskKind::kSum, g, 0.7, 0.1);
    const double now = r.pref(TaskKind::kSum, g);
    CHECK(now >= prev);
    CHECK(now <= 0.7);
    prev = now;
  }
  CHECK(prev == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(r.visit_counts.at(PolicyState::key(TaskKind::kSum, g)) == 200);
  CHECK_THROWS(update_policy(r, TaskKind::kSum, g, std::nan(""), 0.1));
  CHECK_THROWS(update_policy(r, TaskKind::kSum, g, 1.0, 0.0));
}

TEST_CASE("memory store") {
  MemoryStore m(2);
  CHECK(memory_hint(m, TaskKind::kSum).empty());
  m.write(TaskKind::kSum, "first", 1);
  CHECK(memory_hint(m, TaskKind::kSum) == "first");
  CHECK(memory_hint(m, TaskKind::kReverse).empty());
  m.write(TaskKind::kSum, "second", 2);
  CHECK(memory_hint(m, TaskKind::kSum) == "second\nfirst");
  m.write(TaskKind::kSum, "first", 3);  // refresh, no duplicate
  CHECK(m.notes().size() == 2);
  const auto evicted = m.write(TaskKind::kSum, "third", 4);
  REQUIRE(evicted.has_value());
  CHECK(m.notes().size() == 2);
  CHECK(memory_hint(m, TaskKind::kSum).find("second") == std::string::npos);
  CHECK_THROWS(m.write(TaskKind::kSum, std::string(129, 'x'), 5));
  CHECK_THROWS(MemoryStore(0));
}

TEST_CASE("hint is bounded") {
  MemoryStore m(8);
  for (int i = 0; i < 8; ++i) m.write(TaskKind::kSum, std::string(100, static_cast<char>('a' + i)), i);
  CHECK(memory_hint(m, TaskKind::kSum).size() == kMaxHintChars);
}

TEST_CASE("add on SUM") {
  const Task task = make_fixture_task(TaskKind::kSum, ints(3, 4));
  MemoryStore memory;
  const Trajectory t = run_action(task, use_tool("add", {{"a", "a"}, {"b", "b"}}), {}, &memory);
  CHECK(action_step_count(t) == 1);
  REQUIRE(std::holds_alternative<ToolCallStep>(t.steps[0]));
  CHECK(*t.final_answer == Value::integer(7));
  CHECK(t.outcome_correct);
  REQUIRE(t.steps.size() == 2);
  CHECK(std::holds_alternative<MemoryWriteStep>(t.steps[1]));
  CHECK(memory.notes().size() == 1);
  CHECK(t.context_chars > 0);
}

TEST_CASE("fast_add with a negative operand falls back to add") {
  const Task task = make_fixture_task(TaskKind::kSum, ints(-1, 2));
  const Trajectory t = run_action(task, use_tool("fast_add", {{"a", "a"}, {"b", "b"}}));
  REQUIRE(action_step_count(t) == 2);
  const auto& first = std::get<ToolCallStep>(t.steps[0]);
  CHECK(first.tool == "fast_add");
  CHECK(std::get<ToolError>(first.result).kind == ErrorKind::kDomainGuard);
  CHECK_FALSE(all_passed(first.schema_checks));
  const auto& second = std::get<ToolCallStep>(t.steps[1]);
  CHECK(second.tool == "add");
  const auto names = check_names(second);
  CHECK(std::find(names.begin(), names.end(), "fallback_guard:operand_negative") != names.end());
  CHECK(all_passed(second.contract_checks));
  CHECK(*t.final_answer == Value::integer(1));
  CHECK(t.outcome_correct);
}

TEST_CASE("guess on SUM is wrong") {
  const Trajectory t = run_action(make_fixture_task(TaskKind::kSum, ints(3, 4)), Guess{Value::integer(0)});
  CHECK_FALSE(t.outcome_correct);
  REQUIRE(t.steps.size() == 1);
  CHECK(std::holds_alternative<DirectAnswerStep>(t.steps[0]));
}

TEST_CASE("compose records a prior-output contract") {
  const Task task = make_fixture_task(TaskKind::kSumReport, ints(3, 4));
  const Trajectory t = run_action(task, Compose{use_tool("add", {{"a", "a"}, {"b", "b"}}), use_tool("fmt", {}), "n"});
  CHECK(t.outcome_correct);
  REQUIRE(action_step_count(t) == 2);
  const auto names = check_names(std::get<ToolCallStep>(t.steps[1]));
  CHECK(names == std::vector<std::string>{"contract:n"});
}

TEST_CASE("skill calls") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  const auto b = verify_and_promote(graph, log, add_fmt_program(), TaskKind::kSumReport, 0);
  const Task task = make_fixture_task(TaskKind::kSumReport, ints(3, 4));
  const Trajectory t = run_action(task, UseSkill{b.skill_id}, *graph.snapshot());
  REQUIRE(action_step_count(t) == 1);
  const auto& call = std::get<SkillCallStep>(t.steps[0]);
  CHECK(call.pre_ok);
  CHECK(call.post_ok);
  CHECK(all_passed(call.internal_contract_checks));
  CHECK(t.outcome_correct);

  const Trajectory missing = run_action(task, UseSkill{hash_bytes("nope")}, *graph.snapshot());
  CHECK_FALSE(missing.outcome_correct);
  CHECK(std::get<ToolError>(std::get<SkillCallStep>(missing.steps[0]).result).kind == ErrorKind::kUnknownSkill);
}

TEST_CASE("execute_episode is deterministic") {
  const Task task = make_fixture_task(TaskKind::kSum, ints(3, 4));
  const RandomStream stream(0, "policy/select");
  PolicyState policy;
  MemoryStore m1;
  MemoryStore m2;
  const auto a = execute_episode(task.view(), policy, {}, ToolRegistry::standard(), m1, EpisodeConfig{4, 0.5}, stream,
                                 3, oracle_for(task));
  const auto b = execute_episode(task.view(), policy, {}, ToolRegistry::standard(), m2, EpisodeConfig{4, 0.5}, stream,
                                 3, oracle_for(task));
  CHECK(a == b);
}

TEST_CASE("trajectory and policy codecs") {
  const Task task = make_fixture_task(TaskKind::kSum, ints(-1, 2));
  const Trajectory t = run_action(task, use_tool("fast_add", {{"a", "a"}, {"b", "b"}}));
  CHECK(canonical_decode<Trajectory>(canonical_encode(t)) == t);
  PolicyState p;
  update_policy(p, TaskKind::kSum, t.action, 0.5, 0.1);
  CHECK(canonical_decode<PolicyState>(canonical_encode(p)) == p);
  const ActionTemplate c = Compose{use_tool("add", {{"a", "a"}, {"b", "b"}}), use_tool("fmt", {}), "n"};
  CHECK(canonical_decode<ActionTemplate>(canonical_encode(c)) == c);
  CHECK(template_key(c) == hash_record(c));
}
