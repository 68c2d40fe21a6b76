#include "skillaudit/verifier.h"

namespace skillaudit {
namespace {

std::vector<ReplayRecord> replay_suite(const ToolRegistry& registry, const SkillProgram& program,
                                       const std::vector<Task>& tasks) {
  std::vector<ReplayRecord> records;
  records.reserve(tasks.size());
  for (const auto& task : tasks) records.push_back(replay_program(registry, program, task));
  return records;
}

std::string describe_difference(const ReplayRecord& stored, const ReplayRecord& fresh) {
  if (stored.replayed_answer_hash != fresh.replayed_answer_hash) return "replayed answer hash differs";
  if (stored.expected_hash != fresh.expected_hash) return "expected hash differs";
  if (stored.outcome_pass != fresh.outcome_pass) return "outcome differs";
  if (stored.schema_checks != fresh.schema_checks) return "schema checks differ";
  return "contract checks differ";
}

}  // namespace

ReplayRecord replay_program(const ToolRegistry& registry, const SkillProgram& program, const Task& task) {
  ProgramRun run = run_program(registry, program, task.inputs);
  ReplayRecord record;
  record.task_ref = task.ref;
  record.schema_checks = std::move(run.schema_checks);
  record.contract_checks = std::move(run.contract_checks);
  if (is_ok(run.result)) {
    record.contract_checks.push_back(check_type_contract("postcondition:output_type", kind_schema(task.kind).output,
                                                         std::get<Value>(run.result)));
  }
  record.expected_hash = answer_hash(Outcome{task.ground_truth});
  record.replayed_answer_hash = answer_hash(run.result);
  record.outcome_pass = is_ok(run.result) && std::get<Value>(run.result) == task.ground_truth;
  return record;
}

std::vector<Task> suite_tasks(const SuiteSpec& suite, const SkillInterface& iface) {
  std::vector<Task> tasks;
  for (const TaskKind kind : iface.applicable_kinds) {
    if (suite.holdout_n > 0) {
      for (auto& t : holdout_suite(kind, suite.holdout_seed, suite.holdout_n)) tasks.push_back(std::move(t));
    }
    if (suite.perturb_n > 0) {
      for (auto& t : perturb_suite(kind, suite.holdout_seed, suite.perturb_n)) tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

EvidenceBundle verify_candidate(const CandidateSkill& candidate, const Environment& env, const VerifierConfig& config,
                                AuditLog& log) {
  const Digest program_hash = skill_hash(candidate.program);
  if (program_hash != candidate.skill_id) throw std::invalid_argument("candidate skill_id is not its program hash");

  EvidenceBundle bundle;
  bundle.skill_id = candidate.skill_id;
  bundle.program_hash = program_hash;
  bundle.program = candidate.program;
  bundle.interface = candidate.interface;
  bundle.versions = env.version_stamp();
  bundle.suite_spec = config.suite;
  bundle.test_records = replay_suite(env.tools(), candidate.program, suite_tasks(config.suite, candidate.interface));
  bundle.pass_rate = tally(bundle.test_records);
  bundle.decision = decide(bundle.test_records, config.suite.theta);
  bundle.bundle_hash = compute_bundle_hash(bundle);
  log.append(PayloadKind::kEvidence, canonical_encode(bundle));
  return bundle;
}

ReproductionReport replay_bundle(const EvidenceBundle& bundle, const Environment& env) {
  const VersionStamp current = env.version_stamp();
  if (bundle.versions.verifier_version != current.verifier_version) {
    throw VersionMismatch("bundle was produced by verifier " + bundle.versions.verifier_version + ", current is " +
                          current.verifier_version);
  }
  if (bundle.versions != current) throw VersionMismatch("bundle tool or harness versions differ from the registry");

  std::vector<Task> tasks;
  tasks.reserve(bundle.test_records.size());
  for (const auto& record : bundle.test_records) tasks.push_back(make_task(record.task_ref));

  ReproductionReport report;
  report.bundle_hash = bundle.bundle_hash;
  const auto fresh = replay_suite(env.tools(), bundle.program, tasks);
  bool all_agree = true;
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    const ReplayRecord& stored = bundle.test_records[i];
    RecordAgreement agreement{stored.task_ref, fresh[i] == stored, ""};
    if (!agreement.agrees) agreement.detail = describe_difference(stored, fresh[i]);
    all_agree = all_agree && agreement.agrees;
    report.records.push_back(std::move(agreement));
  }
  report.replayed_pass_rate = tally(fresh);
  report.replayed_decision = decide(fresh, bundle.suite_spec.theta);
  report.full_agreement = all_agree && bundle_consistent(bundle) && report.replayed_decision == bundle.decision;
  return report;
}

RegressionReport regression_sweep(SkillGraph& graph, const Environment& env, std::uint64_t episode, AuditLog& log) {
  const auto snapshot = graph.snapshot();
  RegressionReport report;
  report.episode = episode;
  for (const auto& [id, node] : snapshot->nodes) {
    if (node.status != SkillStatus::kPromoted) continue;
    SweepResult result{id, {}, false};
    const auto entry = node.evidence_ref ? log.find_evidence(*node.evidence_ref) : std::nullopt;
    if (entry) {
      const auto bundle = canonical_decode<EvidenceBundle>(entry->payload);
      const auto records =
          replay_suite(env.tools(), node.program, suite_tasks(bundle.suite_spec, node.interface));
      result.pass_rate = tally(records);
      result.passed = decide(records, bundle.suite_spec.theta) == Decision::kPass;
    }
    if (!result.passed) report.retired.push_back(id);
    report.results.push_back(std::move(result));
  }
  log.append(PayloadKind::kRegression, canonical_encode(report));
  for (const auto& id : report.retired) {
    graph.retire(id, "regression sweep failed at episode " + std::to_string(episode), episode, log);
  }
  return report;
}

Json to_canon(const SweepResult& r) {
  Json j = Json::object();
  j["skill_id"] = to_canon(r.skill_id);
  j["pass_rate"] = to_canon(r.pass_rate);
  j["passed"] = r.passed;
  return j;
}

void from_canon(const Json& j, SweepResult& out) {
  read_field(j, "skill_id", out.skill_id);
  read_field(j, "pass_rate", out.pass_rate);
  read_field(j, "passed", out.passed);
}

Json to_canon(const RegressionReport& r) {
  Json j = Json::object();
  j["episode"] = r.episode;
  j["results"] = to_canon(r.results);
  j["retired"] = to_canon(r.retired);
  return j;
}

void from_canon(const Json& j, RegressionReport& out) {
  read_field(j, "episode", out.episode);
  read_field(j, "results", out.results);
  read_field(j, "retired", out.retired);
}

}  // namespace skillaudit
