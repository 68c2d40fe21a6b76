#include <atomic>
#include <thread>

#include "doctest.h"
#include "test_fixtures.h"
#include "test_util.h"

using namespace skillaudit;
using namespace testutil;

TEST_CASE("promotion with a PASS bundle makes the node applicable") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  CHECK(applicable_skills(*graph.snapshot(), view_of(TaskKind::kSum, ints(1, 2))).empty());
  const auto bundle = verify_and_promote(graph, log, add_program(), TaskKind::kSum, 1);
  CHECK(bundle.decision == Decision::kPass);
  const auto applicable = applicable_skills(*graph.snapshot(), view_of(TaskKind::kSum, ints(1, 2)));
  REQUIRE(applicable.size() == 1);
  CHECK(applicable[0].status == SkillStatus::kPromoted);
  CHECK(*applicable[0].evidence_ref == bundle.bundle_hash);
  CHECK(*applicable[0].promoted_at == 1);
  CHECK(applicable_skills(*graph.snapshot(), view_of(TaskKind::kReverse, {{"s", Value::string("x")}})).empty());
  CHECK(log.entries().back().payload_kind == PayloadKind::kPromotion);
}

TEST_CASE("promoting the same skill twice is a no-op") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  const auto bundle = verify_and_promote(graph, log, add_program(), TaskKind::kSum, 1);
  const auto before = *graph.snapshot();
  const auto size = log.size();
  graph.promote(candidate_node(make_candidate(add_program(), TaskKind::kSum)), bundle.bundle_hash, 5, log);
  CHECK(*graph.snapshot() == before);
  CHECK(log.size() == size);
}

TEST_CASE("promotion gate rejects FAIL bundles and unknown evidence") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  const auto bad = make_candidate(one_step("mul", {{"a", "a"}, {"b", "a"}}), TaskKind::kProduct);
  const auto bundle = verify_candidate(bad, Environment(), VerifierConfig{}, log);
  CHECK(bundle.decision == Decision::kFail);
  CHECK_THROWS_AS(graph.promote(candidate_node(bad), bundle.bundle_hash, 1, log), PromotionRejected);
  CHECK_THROWS_AS(graph.promote(candidate_node(bad), hash_bytes("missing"), 1, log), PromotionRejected);

  // A PASS bundle for a different skill does not open the gate.
  const auto good = make_candidate(add_program(), TaskKind::kSum);
  const auto pass = verify_candidate(good, Environment(), VerifierConfig{}, log);
  CHECK_THROWS_AS(graph.promote(candidate_node(bad), pass.bundle_hash, 1, log), PromotionRejected);

  SkillNode forged = candidate_node(good);
  forged.skill_id = hash_bytes("forged");
  CHECK_THROWS_AS(graph.promote(forged, pass.bundle_hash, 1, log), PromotionRejected);
  CHECK(graph.snapshot()->nodes.empty());
}

TEST_CASE("applicable skills are ordered by promotion episode") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  verify_and_promote(graph, log, one_step("add", {{"a", "b"}, {"b", "a"}}), TaskKind::kSum, 20);
  verify_and_promote(graph, log, add_program(), TaskKind::kSum, 10);
  const auto applicable = applicable_skills(*graph.snapshot(), view_of(TaskKind::kSum, ints(1, 2)));
  REQUIRE(applicable.size() == 2);
  CHECK(*applicable[0].promoted_at == 10);
  CHECK(*applicable[1].promoted_at == 20);
}

TEST_CASE("edge contracts") {
  const SkillEdge comp{hash_bytes("p"), hash_bytes("c"), EdgeKind::kComposition,
                       EdgeContract{SemType::kInt, "n", SemType::kInt}, std::nullopt};
  CHECK(check_edge_contract(comp, Value::integer(7)).passed);
  SkillEdge str = comp;
  str.contract = EdgeContract{SemType::kStr, "s", SemType::kStr};
  CHECK_FALSE(check_edge_contract(str, Value::integer(7)).passed);

  const SkillEdge fb{hash_bytes("p"), hash_bytes("c"), EdgeKind::kFallback,
                     EdgeContract{SemType::kInt, "*", SemType::kInt}, std::string("operand_negative")};
  CHECK(check_edge_contract(fb, Value::integer(1), {{"a", Value::integer(-1)}}).passed);
  CHECK_FALSE(check_edge_contract(fb, Value::integer(1), {{"a", Value::integer(1)}}).passed);
}

TEST_CASE("add_edge validation") {
  GraphState g;
  g.nodes[hash_bytes("p")].skill_id = hash_bytes("p");
  g.nodes[hash_bytes("c")].skill_id = hash_bytes("c");
  const SkillEdge comp{hash_bytes("p"), hash_bytes("c"), EdgeKind::kComposition,
                       EdgeContract{SemType::kInt, "n", SemType::kInt}, std::nullopt};
  g.add_edge(comp);
  CHECK_THROWS(g.add_edge(comp));
  SkillEdge mistyped = comp;
  mistyped.contract.type = SemType::kStr;
  CHECK_THROWS(g.add_edge(mistyped));
  SkillEdge unguarded{hash_bytes("p"), hash_bytes("c"), EdgeKind::kFallback, comp.contract, std::nullopt};
  CHECK_THROWS(g.add_edge(unguarded));
  unguarded.guard = "no_such_guard";
  CHECK_THROWS(g.add_edge(unguarded));
}

namespace {

SkillNode seeded(const SkillProgram& program, TaskKind kind, std::uint64_t episode) {
  SkillNode node = candidate_node(make_candidate(program, kind));
  node.status = SkillStatus::kPromoted;
  node.promoted_at = episode;
  node.evidence_ref = hash_bytes("seeded");
  return node;
}

}  // namespace

TEST_CASE("composition edge between existing single-step skills") {
  TempDir dir;
  AuditLog log(dir.path());
  // fmt alone solves no kind, so it is seeded rather than verified.
  GraphState initial;
  const SkillNode fmt = seeded(one_step("fmt", {{"n", "a"}}), TaskKind::kSumReport, 0);
  initial.nodes.emplace(fmt.skill_id, fmt);
  SkillGraph graph(ToolRegistry::standard(), initial);
  const auto add = verify_and_promote(graph, log, add_program(), TaskKind::kSum, 1);
  const auto chain = verify_and_promote(graph, log, add_fmt_program(), TaskKind::kSumReport, 2);
  const auto snap = graph.snapshot();
  REQUIRE(snap->edges.size() == 1);
  const SkillEdge& e = snap->edges[0];
  CHECK(e.kind == EdgeKind::kComposition);
  CHECK(e.from == add.skill_id);
  CHECK(e.to == fmt.skill_id);
  CHECK(e.contract == EdgeContract{SemType::kInt, "n", SemType::kInt});
  CHECK(snap->find(chain.skill_id)->internal_contracts.empty());
}

TEST_CASE("composition without single-step skills becomes an internal contract") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  const auto chain = verify_and_promote(graph, log, add_fmt_program(), TaskKind::kSumReport, 1);
  const auto snap = graph.snapshot();
  CHECK(snap->edges.empty());
  const auto& contracts = snap->find(chain.skill_id)->internal_contracts;
  REQUIRE(contracts.size() == 1);
  CHECK(contracts[0] == EdgeContract{SemType::kInt, "n", SemType::kInt});
}

TEST_CASE("guarded fallback edge from a fast_add skill to its add variant") {
  TempDir dir;
  AuditLog log(dir.path());
  GraphState initial;
  const SkillNode fast = seeded(one_step("fast_add", {{"a", "a"}, {"b", "b"}}), TaskKind::kSum, 0);
  initial.nodes.emplace(fast.skill_id, fast);
  SkillGraph graph(ToolRegistry::standard(), initial);
  const auto add = verify_and_promote(graph, log, add_program(), TaskKind::kSum, 1);
  const auto snap = graph.snapshot();
  REQUIRE(snap->edges.size() == 1);
  const SkillEdge& e = snap->edges[0];
  CHECK(e.kind == EdgeKind::kFallback);
  CHECK(e.from == fast.skill_id);
  CHECK(e.to == add.skill_id);
  CHECK(e.guard == std::optional<std::string>("operand_negative"));
}

TEST_CASE("retire") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  const auto bundle = verify_and_promote(graph, log, add_program(), TaskKind::kSum, 1);
  const Digest id = bundle.skill_id;
  graph.retire(id, "test", 7, log);
  CHECK(applicable_skills(*graph.snapshot(), view_of(TaskKind::kSum, ints(1, 2))).empty());
  CHECK(graph.snapshot()->find(id)->status == SkillStatus::kRetired);
  CHECK_THROWS_AS(graph.retire(id, "again", 8, log), UnknownSkill);
  CHECK_THROWS_AS(graph.retire(hash_bytes("nope"), "x", 8, log), UnknownSkill);
  CHECK(log.find_evidence(bundle.bundle_hash).has_value());
  CHECK(log.entries().back().payload_kind == PayloadKind::kRetirement);
}

TEST_CASE("as_of hides later promotions and applies retirements") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  const auto b = verify_and_promote(graph, log, add_program(), TaskKind::kSum, 10);
  graph.retire(b.skill_id, "x", 20, log);
  const auto snap = graph.snapshot();
  CHECK(snap->as_of(5).nodes.empty());
  CHECK(snap->as_of(10).find(b.skill_id)->status == SkillStatus::kPromoted);
  CHECK(snap->as_of(19).find(b.skill_id)->status == SkillStatus::kPromoted);
  CHECK(snap->as_of(20).find(b.skill_id)->status == SkillStatus::kRetired);
}

TEST_CASE("rebuild from the log matches the live graph") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  verify_and_promote(graph, log, add_program(), TaskKind::kSum, 1);
  const auto r = verify_and_promote(graph, log, one_step("rev", {{"s", "s"}}), TaskKind::kReverse, 2);
  verify_and_promote(graph, log, add_fmt_program(), TaskKind::kSumReport, 3);
  graph.retire(r.skill_id, "x", 4, log);
  const GraphState rebuilt = SkillGraph::rebuild(log.entries());
  CHECK(rebuilt == *graph.snapshot());
  CHECK(export_canonical(rebuilt) == export_canonical(*graph.snapshot()));
  CHECK(canonical_decode<GraphState>(export_canonical(rebuilt)) == rebuilt);
  CHECK(export_dot(rebuilt).rfind("digraph", 0) == 0);
  CHECK_FALSE(check_gate_soundness(rebuilt, log.entries()).has_value());
}

TEST_CASE("gate soundness scan flags a node without evidence") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  verify_and_promote(graph, log, add_program(), TaskKind::kSum, 1);
  GraphState state = *graph.snapshot();
  state.nodes.begin()->second.evidence_ref = hash_bytes("missing");
  CHECK(check_gate_soundness(state, log.entries()).has_value());
}

TEST_CASE("readers see consistent snapshots while a writer promotes") {
  TempDir dir;
  AuditLog log(dir.path());
  SkillGraph graph;
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::vector<std::thread> readers;
  for (int i = 0; i < 4; ++i) {
    readers.emplace_back([&] {
      while (!done) {
        const auto snap = graph.snapshot();
        for (const auto& [id, node] : snap->nodes) {
          if (node.status != SkillStatus::kPromoted || !node.evidence_ref) ++bad;
        }
      }
    });
  }
  verify_and_promote(graph, log, add_program(), TaskKind::kSum, 1);
  verify_and_promote(graph, log, one_step("mul", {{"a", "a"}, {"b", "b"}}), TaskKind::kProduct, 2);
  verify_and_promote(graph, log, one_step("rev", {{"s", "s"}}), TaskKind::kReverse, 3);
  done = true;
  for (auto& t : readers) t.join();
  CHECK(bad == 0);
  CHECK(graph.snapshot()->promoted_count() == 3);
}
