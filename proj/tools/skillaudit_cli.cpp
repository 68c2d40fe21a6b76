#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "skillaudit/harness.h"

namespace fs = std::filesystem;
using namespace skillaudit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIntegrity = 2;
constexpr int kExitIo = 3;

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed, const std::string& out) {
  RunConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      std::cerr << "cannot read config " << config_path << "\n";
      return kExitIo;
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
      config = parse_config(text.str());
    } catch (const std::invalid_argument& e) {
      std::cerr << "invalid config: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  if (seed) config.seed = *seed;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitUsage;
  }
  const RunResult result = run_loop(config, out);
  std::cout << "run complete: episodes=" << result.episodes << " promotions=" << result.promotions
            << " retirements=" << result.retirements << " audit_entries=" << result.audit_entries
            << " dir=" << result.dir.string() << "\n";
  return kExitOk;
}

int cmd_audit_verify(const std::string& dir) {
  const fs::path audit = audit_dir_of(dir);
  const ChainStatus status = verify_chain(audit);
  if (!status.ok) {
    std::cout << "FAIL first-bad-index=" << *status.first_bad_index << " " << status.detail << "\n";
    return kExitIntegrity;
  }
  const auto head = read_head(audit);
  if (status.entries > 0 && (!head || *head != status.last_hash)) {
    std::cout << "FAIL first-bad-index=" << status.entries << " HEAD does not match the last entry (truncated log?)\n";
    return kExitIntegrity;
  }
  std::cout << "OK entries=" << status.entries << " head=" << status.last_hash.hex() << "\n";
  return kExitOk;
}

int cmd_replay(const std::string& dir, const std::string& bundle_prefix) {
  const auto entries = read_entries(audit_dir_of(dir));
  std::optional<EvidenceBundle> found;
  for (const auto& entry : entries) {
    if (entry.payload_kind != PayloadKind::kEvidence) continue;
    auto bundle = canonical_decode<EvidenceBundle>(entry.payload);
    if (bundle.bundle_hash.hex().rfind(bundle_prefix, 0) != 0) continue;
    if (found && found->bundle_hash != bundle.bundle_hash) {
      std::cerr << "bundle prefix " << bundle_prefix << " is ambiguous\n";
      return kExitUsage;
    }
    found = std::move(bundle);
  }
  if (!found) {
    std::cerr << "no evidence bundle matching " << bundle_prefix << "\n";
    return kExitUsage;
  }
  const Environment env;
  ReproductionReport rep;
  try {
    rep = replay_bundle(*found, env);
  } catch (const VersionMismatch& e) {
    std::cout << "VERSION-MISMATCH " << e.what() << "\n";
    return kExitIntegrity;
  }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const auto& r = rep.records[i];
    agree += r.agrees ? 1 : 0;
    std::cout << "record " << i << " " << r.task_ref.path << "#" << r.task_ref.index << ": "
              << (r.agrees ? "agree" : "DISAGREE " + r.detail) << "\n";
  }
  std::cout << "bundle=" << found->bundle_hash.hex() << " skill=" << found->skill_id.hex()
            << " agreement=" << agree << "/" << rep.records.size() << " pass_rate=" << rep.replayed_pass_rate.passes
            << "/" << rep.replayed_pass_rate.total << " decision=" << to_string(rep.replayed_decision)
            << " recorded_decision=" << to_string(found->decision)
            << (rep.full_agreement ? " REPRODUCED" : " NOT-REPRODUCED") << "\n";
  return rep.full_agreement ? kExitOk : kExitIntegrity;
}

int cmd_graph_export(const std::string& dir, const std::string& format) {
  const GraphState graph = SkillGraph::rebuild(read_entries(audit_dir_of(dir)));
  std::cout << (format == "dot" ? export_dot(graph) : export_canonical(graph) + "\n");
  return kExitOk;
}

int cmd_report(const std::string& dir, std::uint64_t window) {
  const MetricsSummary s = report(dir, window);
  std::cout << "episodes=" << s.episodes << " promoted=" << s.promoted << " retired=" << s.retired
            << " reconstruction_parity=" << s.parity_matched << "/" << s.parity_total
            << " rate=" << s.reconstruction_parity_rate << "\n";
  std::cout << metrics_csv(s);
  return s.reconstruction_parity_rate == 1.0 ? kExitOk : kExitIntegrity;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audited skill-graph agent loop"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  auto* run = app.add_subcommand("run", "Run the agent loop into a fresh directory");
  run->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out, "Output directory (must be absent or empty)");

  std::string dir;
  auto* verify = app.add_subcommand("audit-verify", "Verify the audit hash chain and HEAD");
  verify->add_option("--dir", dir, "Run or audit directory")->required();

  std::string bundle;
  auto* replay = app.add_subcommand("replay", "Re-run an evidence bundle's suite");
  replay->add_option("--dir", dir, "Run directory")->required();
  replay->add_option("--bundle", bundle, "Bundle hash (or unique prefix)")->required();

  std::string format = "canonical";
  auto* graph = app.add_subcommand("graph-export", "Print the skill graph rebuilt from the audit log");
  graph->add_option("--dir", dir, "Run directory")->required();
  graph->add_option("--format", format, "canonical or dot")->check(CLI::IsMember({"canonical", "dot"}));

  std::uint64_t window = 100;
  auto* rep = app.add_subcommand("report", "Reconstruct rewards and write metrics.csv and summary.json");
  rep->add_option("--dir", dir, "Run directory")->required();
  rep->add_option("--window", window, "Metrics window length")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(config_path, seed, out);
    if (*verify) return cmd_audit_verify(dir);
    if (*replay) return cmd_replay(dir, bundle);
    if (*graph) return cmd_graph_export(dir, format);
    if (*rep) return cmd_report(dir, window);
  } catch (const AuditIntegrityError& e) {
    std::cerr << "integrity failure: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity failure: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const ProvenanceError& e) {
    std::cerr << "integrity failure: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const PromotionRejected& e) {
    std::cerr << "integrity failure: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const DecodeError& e) {
    std::cerr << "integrity failure: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const AuditIoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const RunIoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
