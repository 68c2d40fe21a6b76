#include "skillaudit/evidence.h"

namespace skillaudit {
namespace {

Json bundle_body(const EvidenceBundle& b) {
  Json j = Json::object();
  j["skill_id"] = to_canon(b.skill_id);
  j["program_hash"] = to_canon(b.program_hash);
  j["program"] = to_canon(b.program);
  j["interface"] = to_canon(b.interface);
  j["versions"] = to_canon(b.versions);
  j["suite_spec"] = to_canon(b.suite_spec);
  j["test_records"] = to_canon(b.test_records);
  j["pass_rate"] = to_canon(b.pass_rate);
  j["decision"] = to_canon(b.decision);
  return j;
}

}  // namespace

std::string_view to_string(Decision d) { return d == Decision::kPass ? "PASS" : "FAIL"; }

Digest compute_bundle_hash(const EvidenceBundle& bundle) { return hash_bytes(canonical_dump(bundle_body(bundle))); }

PassRate tally(const std::vector<ReplayRecord>& records) {
  PassRate rate{0, records.size()};
  for (const auto& r : records) rate.passes += r.outcome_pass ? 1 : 0;
  return rate;
}

Decision decide(const std::vector<ReplayRecord>& records, double theta) {
  const PassRate rate = tally(records);
  if (rate.total == 0) return Decision::kFail;
  for (const auto& r : records) {
    if (!all_passed(r.schema_checks) || !all_passed(r.contract_checks)) return Decision::kFail;
  }
  // Integer comparison when theta is exactly 1 keeps the rule free of rounding.
  const bool enough = theta >= 1.0 ? rate.passes == rate.total
                                   : static_cast<double>(rate.passes) >= theta * static_cast<double>(rate.total);
  return enough ? Decision::kPass : Decision::kFail;
}

bool bundle_consistent(const EvidenceBundle& bundle, std::string* why) {
  const auto fail = [why](const char* reason) {
    if (why) *why = reason;
    return false;
  };
  try {
    if (skill_hash(bundle.program) != bundle.program_hash) return fail("program_hash does not match program");
  } catch (const std::invalid_argument&) {
    return fail("program is ill-formed");
  }
  if (bundle.skill_id != bundle.program_hash) return fail("skill_id does not match program_hash");
  if (tally(bundle.test_records) != bundle.pass_rate) return fail("pass_rate inconsistent with test records");
  if (decide(bundle.test_records, bundle.suite_spec.theta) != bundle.decision) {
    return fail("decision inconsistent with promotion rule");
  }
  if (compute_bundle_hash(bundle) != bundle.bundle_hash) return fail("bundle_hash mismatch");
  return true;
}

Digest answer_hash(const Outcome& outcome) { return hash_record(outcome); }

Json to_canon(const ReplayRecord& r) {
  Json j = Json::object();
  j["task_ref"] = to_canon(r.task_ref);
  j["replayed_answer_hash"] = to_canon(r.replayed_answer_hash);
  j["expected_hash"] = to_canon(r.expected_hash);
  j["outcome_pass"] = r.outcome_pass;
  j["schema_checks"] = to_canon(r.schema_checks);
  j["contract_checks"] = to_canon(r.contract_checks);
  return j;
}

void from_canon(const Json& j, ReplayRecord& out) {
  read_field(j, "task_ref", out.task_ref);
  read_field(j, "replayed_answer_hash", out.replayed_answer_hash);
  read_field(j, "expected_hash", out.expected_hash);
  read_field(j, "outcome_pass", out.outcome_pass);
  read_field(j, "schema_checks", out.schema_checks);
  read_field(j, "contract_checks", out.contract_checks);
}

Json to_canon(const SuiteSpec& s) {
  Json j = Json::object();
  j["holdout_seed"] = s.holdout_seed;
  j["holdout_n"] = s.holdout_n;
  j["perturb_n"] = s.perturb_n;
  j["theta"] = s.theta;
  return j;
}

void from_canon(const Json& j, SuiteSpec& out) {
  read_field(j, "holdout_seed", out.holdout_seed);
  read_field(j, "holdout_n", out.holdout_n);
  read_field(j, "perturb_n", out.perturb_n);
  read_field(j, "theta", out.theta);
}

Json to_canon(const PassRate& rate) {
  Json j = Json::object();
  j["passes"] = rate.passes;
  j["total"] = rate.total;
  return j;
}

void from_canon(const Json& j, PassRate& out) {
  read_field(j, "passes", out.passes);
  read_field(j, "total", out.total);
}

Json to_canon(Decision d) { return Json(std::string(to_string(d))); }

void from_canon(const Json& j, Decision& out) {
  const std::string name = decode_string(j);
  if (name == "PASS") out = Decision::kPass;
  else if (name == "FAIL") out = Decision::kFail;
  else throw DecodeError("", "unknown decision '" + name + "'");
}

Json to_canon(const EvidenceBundle& bundle) {
  Json j = bundle_body(bundle);
  j["bundle_hash"] = to_canon(bundle.bundle_hash);
  return j;
}

void from_canon(const Json& j, EvidenceBundle& out) {
  read_field(j, "skill_id", out.skill_id);
  read_field(j, "program_hash", out.program_hash);
  read_field(j, "program", out.program);
  read_field(j, "interface", out.interface);
  read_field(j, "versions", out.versions);
  read_field(j, "suite_spec", out.suite_spec);
  read_field(j, "test_records", out.test_records);
  read_field(j, "pass_rate", out.pass_rate);
  read_field(j, "decision", out.decision);
  read_field(j, "bundle_hash", out.bundle_hash);
}

}  // namespace skillaudit
