#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skillaudit/digest.h"
#include "skillaudit/environment.h"
#include "skillaudit/skill_program.h"

namespace skillaudit {

/// Outcome of replaying one program on one regenerable task. Answers are
/// stored as hashes; the values themselves are recoverable by replay.
struct ReplayRecord {
  TaskRef task_ref;
  Digest replayed_answer_hash;
  Digest expected_hash;
  bool outcome_pass = false;
  std::vector<CheckResult> schema_checks;
  std::vector<CheckResult> contract_checks;

  bool operator==(const ReplayRecord&) const = default;
};

struct SuiteSpec {
  std::uint64_t holdout_seed = 0;
  std::uint64_t holdout_n = 16;
  std::uint64_t perturb_n = 8;
  double theta = 1.0;

  bool operator==(const SuiteSpec&) const = default;
};

struct PassRate {
  std::uint64_t passes = 0;
  std::uint64_t total = 0;

  bool operator==(const PassRate&) const = default;
};

enum class Decision { kPass, kFail };
std::string_view to_string(Decision d);

struct EvidenceBundle {
  Digest skill_id;
  Digest program_hash;
  SkillProgram program;
  SkillInterface interface;
  VersionStamp versions;
  SuiteSpec suite_spec;
  std::vector<ReplayRecord> test_records;
  PassRate pass_rate;
  Decision decision = Decision::kFail;
  Digest bundle_hash;

  bool operator==(const EvidenceBundle&) const = default;
};

/// Hash of the canonical encoding of every field preceding bundle_hash.
Digest compute_bundle_hash(const EvidenceBundle& bundle);

/// Promotion rule: passes/total >= theta and every recorded check passed.
Decision decide(const std::vector<ReplayRecord>& records, double theta);
PassRate tally(const std::vector<ReplayRecord>& records);

/// Checks internal consistency: program hash, pass rate, decision and
/// bundle hash all recompute from the other fields.
bool bundle_consistent(const EvidenceBundle& bundle, std::string* why = nullptr);

Digest answer_hash(const Outcome& outcome);

Json to_canon(const ReplayRecord& record);
void from_canon(const Json& j, ReplayRecord& out);
Json to_canon(const SuiteSpec& spec);
void from_canon(const Json& j, SuiteSpec& out);
Json to_canon(const PassRate& rate);
void from_canon(const Json& j, PassRate& out);
Json to_canon(Decision d);
void from_canon(const Json& j, Decision& out);
Json to_canon(const EvidenceBundle& bundle);
void from_canon(const Json& j, EvidenceBundle& out);

}  // namespace skillaudit
