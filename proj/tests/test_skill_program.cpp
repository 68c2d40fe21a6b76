#include "doctest.h"
#include "test_fixtures.h"

using namespace skillaudit;
using namespace testutil;

TEST_CASE("skill hash is stable and structural") {
  CHECK(skill_hash(add_program()) == skill_hash(add_program()));
  CHECK(skill_hash(add_program()) != skill_hash(one_step("add", {{"a", "b"}, {"b", "a"}})));
  SkillProgram pinned = add_program();
  pinned.steps[0].version = "1.1";
  CHECK(canonical_encode(pinned) != canonical_encode(add_program()));
  CHECK(skill_hash(pinned) != skill_hash(add_program()));
}

TEST_CASE("binding insertion order does not matter") {
  ProgStep a{"add", "1.0", {}};
  a.bindings.emplace("b", TaskInputRef{"b"});
  a.bindings.emplace("a", TaskInputRef{"a"});
  ProgStep b{"add", "1.0", {}};
  b.bindings.emplace("a", TaskInputRef{"a"});
  b.bindings.emplace("b", TaskInputRef{"b"});
  CHECK(canonical_encode(SkillProgram{{a}}) == canonical_encode(SkillProgram{{b}}));
}

TEST_CASE("well-formedness") {
  CHECK_THROWS_AS(check_well_formed(SkillProgram{}), std::invalid_argument);
  SkillProgram forward = add_program();
  forward.steps[0].bindings["a"] = PriorOutputRef{0};
  CHECK_THROWS_AS(check_well_formed(forward), std::invalid_argument);
  SkillProgram too_long = add_fmt_program();
  too_long.steps.push_back(too_long.steps.back());
  too_long.steps.push_back(too_long.steps.back());
  CHECK_THROWS_AS(check_well_formed(too_long), std::invalid_argument);
  CHECK_THROWS_AS(skill_hash(SkillProgram{}), std::invalid_argument);
  CHECK_NOTHROW(check_well_formed(add_fmt_program()));
}

TEST_CASE("interface precondition") {
  const SkillInterface iface = make_candidate(add_program(), TaskKind::kSum).interface;
  CHECK(check_interface(iface, view_of(TaskKind::kSum, ints(1, 2))).passed);
  CHECK_FALSE(check_interface(iface, view_of(TaskKind::kReverse, {{"s", Value::string("x")}})).passed);
  CHECK_FALSE(check_interface(iface, view_of(TaskKind::kSum, {{"a", Value::integer(1)}})).passed);
}

TEST_CASE("type contracts") {
  CHECK(check_type_contract("c", SemType::kInt, Value::integer(7)).passed);
  CHECK_FALSE(check_type_contract("c", SemType::kStr, Value::integer(7)).passed);
}

TEST_CASE("run_program") {
  const auto reg = ToolRegistry::standard();
  const ProgramRun run = run_program(reg, add_fmt_program(), ints(3, 4));
  REQUIRE(is_ok(run.result));
  CHECK(std::get<Value>(run.result) == Value::string("7"));
  CHECK(run.outputs.size() == 2);
  CHECK(all_passed(run.schema_checks));
  CHECK(all_passed(run.contract_checks));

  const ProgramRun missing = run_program(reg, add_program(), {{"a", Value::integer(1)}});
  REQUIRE_FALSE(is_ok(missing.result));
  CHECK(std::get<ToolError>(missing.result).kind == ErrorKind::kMissingBinding);

  const ProgramRun mismatch = run_program(reg.with_version("add", "1.1"), add_program(), ints(1, 2));
  REQUIRE_FALSE(is_ok(mismatch.result));
  CHECK(std::get<ToolError>(mismatch.result).kind == ErrorKind::kVersionMismatch);

  const ProgramRun guard = run_program(reg, one_step("fast_add", {{"a", "a"}, {"b", "b"}}), ints(-1, 2));
  REQUIRE_FALSE(is_ok(guard.result));
  CHECK(std::get<ToolError>(guard.result).kind == ErrorKind::kDomainGuard);
  CHECK_FALSE(all_passed(guard.schema_checks));
}

TEST_CASE("program codecs") {
  CHECK(canonical_decode<SkillProgram>(canonical_encode(add_fmt_program())) == add_fmt_program());
  const SkillInterface iface = make_candidate(add_fmt_program(), TaskKind::kSumReport).interface;
  CHECK(canonical_decode<SkillInterface>(canonical_encode(iface)) == iface);
}
