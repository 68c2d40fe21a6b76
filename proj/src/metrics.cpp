#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "skillaudit/harness.h"

namespace skillaudit {
namespace fs = std::filesystem;
namespace {

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RunIoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_all(path));
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw RunIoError("cannot write " + path.string());
}

}  // namespace

MetricsSummary compute_metrics(const std::vector<EpisodeRecord>& records, const std::vector<RegressionReport>& sweeps,
                               const std::map<Digest, std::uint64_t>& promotion_episodes,
                               const std::map<Digest, ReuseTally>& reuse, std::uint64_t window) {
  if (records.empty()) throw std::invalid_argument("compute_metrics needs at least one episode record");
  if (window == 0) throw std::invalid_argument("metrics window must be positive");
  MetricsSummary s;
  s.episodes = records.size();
  s.window = window;

  int last_phase = 0;
  for (const auto& r : records) {
    if (r.phase != last_phase) s.phase_changes.push_back(PhaseChange{r.episode, r.phase});
    last_phase = r.phase;
  }

  for (std::uint64_t start = 0; start < records.size(); start += window) {
    const std::uint64_t end = std::min<std::uint64_t>(start + window, records.size());
    WindowMetrics w;
    w.start = records[start].episode;
    w.end = records[end - 1].episode + 1;
    std::uint64_t counts[4] = {0, 0, 0, 0};
    std::uint64_t schema_ok = 0;
    for (std::uint64_t i = start; i < end; ++i) {
      ++counts[static_cast<int>(records[i].attribution)];
      schema_ok += records[i].components.validity == 1.0 ? 1 : 0;
    }
    const std::uint64_t n = end - start;
    w.direct = ratio(counts[0], n);
    w.reuse = ratio(counts[1], n);
    w.composition = ratio(counts[2], n);
    w.fail = ratio(counts[3], n);
    w.schema_correct = ratio(schema_ok, n);

    std::uint64_t invocations = 0;
    std::uint64_t successes = 0;
    for (const auto& [skill, source_episode] : promotion_episodes) {
      if (source_episode < w.start || source_episode >= w.end) continue;
      ++w.promotions;
      if (const auto it = reuse.find(skill); it != reuse.end()) {
        invocations += it->second.invocations;
        successes += it->second.successes;
      }
    }
    w.audited_improvement_rate = ratio(w.promotions, n) * ratio(successes, invocations);
    s.windows.push_back(w);
  }

  for (const auto& sweep : sweeps) {
    RetentionPoint p;
    p.episode = sweep.episode;
    p.nodes = sweep.results.size();
    std::uint64_t passes = 0;
    std::uint64_t total = 0;
    for (const auto& r : sweep.results) {
      p.passed += r.passed ? 1 : 0;
      passes += r.pass_rate.passes;
      total += r.pass_rate.total;
    }
    p.pass_rate = total == 0 ? 1.0 : ratio(passes, total);
    s.retention.push_back(p);
  }
  return s;
}

std::string metrics_csv(const MetricsSummary& summary) {
  std::string out =
      "window_start,window_end,direct,reuse,composition,fail,schema_correct,promotions,audited_improvement_rate\n";
  for (const auto& w : summary.windows) {
    out += std::to_string(w.start) + "," + std::to_string(w.end) + "," + fixed6(w.direct) + "," + fixed6(w.reuse) +
           "," + fixed6(w.composition) + "," + fixed6(w.fail) + "," + fixed6(w.schema_correct) + "," +
           std::to_string(w.promotions) + "," + fixed6(w.audited_improvement_rate) + "\n";
  }
  return out;
}

MetricsSummary report(const fs::path& run_dir, std::uint64_t window) {
  const fs::path audit = run_dir / "audit";
  const ChainStatus status = verify_chain(audit);
  if (!status.ok) {
    throw IntegrityError("audit chain fails at index " + std::to_string(*status.first_bad_index) + ": " +
                         status.detail);
  }
  const auto head = read_head(audit);
  if (!head || *head != status.last_hash) throw IntegrityError("audit HEAD does not match the last entry");
  const std::vector<AuditEntry> entries = read_entries(audit);

  const std::string config_bytes = read_all(run_dir / "config.json");
  if (entries.empty() || entries.front().payload_kind != PayloadKind::kConfig ||
      entries.front().payload != config_bytes) {
    throw IntegrityError("config.json does not match the CONFIG audit entry");
  }
  const auto config = canonical_decode<RunConfig>(config_bytes);
  const GraphState graph = SkillGraph::rebuild(entries);

  std::map<Digest, std::uint64_t> promotion_episodes;
  std::vector<RegressionReport> sweeps;
  std::uint64_t promoted = 0;
  std::uint64_t retired = 0;
  for (const auto& entry : entries) {
    if (entry.payload_kind == PayloadKind::kPromotion) {
      const auto rec = canonical_decode<PromotionRecord>(entry.payload);
      promotion_episodes.emplace(rec.skill_id, rec.episode == 0 ? 0 : rec.episode - 1);
      ++promoted;
    } else if (entry.payload_kind == PayloadKind::kRetirement) {
      ++retired;
    } else if (entry.payload_kind == PayloadKind::kRegression) {
      sweeps.push_back(canonical_decode<RegressionReport>(entry.payload));
    }
  }

  std::vector<EpisodeRecord> records;
  for (const auto& line : read_lines(run_dir / "episodes.log")) {
    try {
      records.push_back(canonical_decode<EpisodeRecord>(line));
    } catch (const DecodeError& e) {
      throw IntegrityError(std::string("episodes.log holds an undecodable record: ") + e.what());
    }
  }

  // Reconstruction parity: recompute every reward from the persisted
  // trajectory and the graph as of its episode, replaying the phase schedule.
  const std::vector<std::string> traj_lines = read_lines(run_dir / "trajectories.log");
  std::map<Digest, ReuseTally> reuse;
  std::uint64_t matched = 0;
  int phase = 1;
  std::deque<RewardComponents> history;
  for (std::size_t i = 0; i < traj_lines.size(); ++i) {
    TrajectoryRecord rec;
    try {
      rec = canonical_decode<TrajectoryRecord>(traj_lines[i]);
    } catch (const DecodeError&) {
      continue;
    }
    const Trajectory& traj = rec.trajectory;
    if (const auto* use = std::get_if<UseSkill>(&traj.action)) {
      auto& tally = reuse[use->skill_id];
      ++tally.invocations;
      tally.successes += traj.outcome_correct ? 1 : 0;
    }
    bool ok = rec.episode == i && traj.episode_index == i;
    RewardComponents rc;
    try {
      rc = reconstruct_reward(traj, graph.as_of(rec.episode), phase, config.weights);
    } catch (const ProvenanceError&) {
      ok = false;
      rc = rec.components;
    }
    const Task task = make_task(TaskRef{traj.kind, config.seed, "train", rec.episode});
    const bool correct = traj.final_answer.has_value() && verify_outcome(task, *traj.final_answer);
    ok = ok && correct == traj.outcome_correct && task.id == traj.task_id;
    ok = ok && canonical_encode(rc) == canonical_encode(rec.components);
    ok = ok && i < records.size() && records[i].components == rc && records[i].phase == phase &&
         records[i].attribution == attribute(rc);
    matched += ok ? 1 : 0;
    history.push_back(rc);
    if (history.size() > config.phase.window) history.pop_front();
    phase = update_phase(history, phase, config.phase);
  }

  MetricsSummary summary = records.empty() ? MetricsSummary{}
                                           : compute_metrics(records, sweeps, promotion_episodes, reuse, window);
  summary.window = window;
  summary.promoted = promoted;
  summary.retired = retired;
  summary.parity_total = std::max<std::uint64_t>(traj_lines.size(), records.size());
  summary.parity_matched = matched;
  summary.reconstruction_parity_rate =
      summary.parity_total == 0 ? 1.0 : ratio(summary.parity_matched, summary.parity_total);

  write_text(run_dir / "metrics.csv", metrics_csv(summary));
  write_text(run_dir / "summary.json", canonical_encode(summary));
  return summary;
}

Json to_canon(const WindowMetrics& w) {
  Json j = Json::object();
  j["start"] = w.start;
  j["end"] = w.end;
  j["direct"] = w.direct;
  j["reuse"] = w.reuse;
  j["composition"] = w.composition;
  j["fail"] = w.fail;
  j["schema_correct"] = w.schema_correct;
  j["promotions"] = w.promotions;
  j["audited_improvement_rate"] = w.audited_improvement_rate;
  return j;
}

void from_canon(const Json& j, WindowMetrics& out) {
  read_field(j, "start", out.start);
  read_field(j, "end", out.end);
  read_field(j, "direct", out.direct);
  read_field(j, "reuse", out.reuse);
  read_field(j, "composition", out.composition);
  read_field(j, "fail", out.fail);
  read_field(j, "schema_correct", out.schema_correct);
  read_field(j, "promotions", out.promotions);
  read_field(j, "audited_improvement_rate", out.audited_improvement_rate);
}

Json to_canon(const RetentionPoint& p) {
  Json j = Json::object();
  j["episode"] = p.episode;
  j["nodes"] = p.nodes;
  j["passed"] = p.passed;
  j["pass_rate"] = p.pass_rate;
  return j;
}

void from_canon(const Json& j, RetentionPoint& out) {
  read_field(j, "episode", out.episode);
  read_field(j, "nodes", out.nodes);
  read_field(j, "passed", out.passed);
  read_field(j, "pass_rate", out.pass_rate);
}

Json to_canon(const PhaseChange& p) {
  Json j = Json::object();
  j["episode"] = p.episode;
  j["phase"] = p.phase;
  return j;
}

void from_canon(const Json& j, PhaseChange& out) {
  read_field(j, "episode", out.episode);
  read_field(j, "phase", out.phase);
}

Json to_canon(const MetricsSummary& s) {
  Json j = Json::object();
  j["episodes"] = s.episodes;
  j["window"] = s.window;
  j["promoted"] = s.promoted;
  j["retired"] = s.retired;
  j["phase_changes"] = to_canon(s.phase_changes);
  j["parity_matched"] = s.parity_matched;
  j["parity_total"] = s.parity_total;
  j["reconstruction_parity_rate"] = s.reconstruction_parity_rate;
  j["windows"] = to_canon(s.windows);
  j["retention"] = to_canon(s.retention);
  return j;
}

void from_canon(const Json& j, MetricsSummary& out) {
  read_field(j, "episodes", out.episodes);
  read_field(j, "window", out.window);
  read_field(j, "promoted", out.promoted);
  read_field(j, "retired", out.retired);
  read_field(j, "phase_changes", out.phase_changes);
  read_field(j, "parity_matched", out.parity_matched);
  read_field(j, "parity_total", out.parity_total);
  read_field(j, "reconstruction_parity_rate", out.reconstruction_parity_rate);
  read_field(j, "windows", out.windows);
  read_field(j, "retention", out.retention);
}

}  // namespace skillaudit
