#pragma once

// Run orchestration, run-directory layout, and metrics.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillaudit/compiler.h"
#include "skillaudit/reward.h"
#include "skillaudit/verifier.h"

namespace skillaudit {

struct ScheduleEntry {
  std::uint64_t start_episode = 0;
  std::map<std::string, double> mix;  // task kind name -> weight

  bool operator==(const ScheduleEntry&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::uint64_t episodes = 600;
  double epsilon = 0.3;
  double epsilon_decay = 0.995;
  double alpha = 0.5;
  std::uint64_t max_steps = 4;
  std::uint64_t memory_capacity = 8;
  PhaseSchedule phase;
  SuiteSpec suite;
  PhaseWeights weights;
  std::vector<ScheduleEntry> schedule = default_schedule();
  std::uint64_t regression_period = 100;
  std::uint64_t metrics_window = 100;
  // "inherit": a promoted skill starts at its source template's pref; "zero".
  std::string skill_pref_init = "inherit";

  static std::vector<ScheduleEntry> default_schedule();

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// Lenient read of a config file: missing keys keep their defaults, unknown
/// keys are rejected. The result is validated.
RunConfig parse_config(std::string_view text);

/// Mix of the last schedule entry starting at or before `episode`.
const std::map<std::string, double>& apply_drift(const std::vector<ScheduleEntry>& schedule, std::uint64_t episode);

/// Weighted draw over a mix (kinds in declaration order).
TaskKind sample_kind(const std::map<std::string, double>& mix, Draw& draw);

enum class Attribution { kDirect, kReuse, kComposition, kFail };
std::string_view to_string(Attribution a);
Attribution attribute(const RewardComponents& c);

struct EpisodeRecord {
  std::uint64_t episode = 0;
  int phase = 1;
  TaskKind kind = TaskKind::kSum;
  Digest template_key;
  RewardComponents components;
  Attribution attribution = Attribution::kFail;
  std::uint64_t promotions_so_far = 0;
  std::uint64_t graph_size = 0;

  bool operator==(const EpisodeRecord&) const = default;
};

/// One line of trajectories.log.
struct TrajectoryRecord {
  std::uint64_t episode = 0;
  Trajectory trajectory;
  RewardComponents components;

  bool operator==(const TrajectoryRecord&) const = default;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RunIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunResult {
  std::filesystem::path dir;
  std::uint64_t episodes = 0;
  std::uint64_t promotions = 0;
  std::uint64_t retirements = 0;
  std::uint64_t audit_entries = 0;
};

/// Runs the full loop into `out_dir`, which must be absent or empty.
/// Files: config.json, audit/, trajectories.log, episodes.log,
/// candidates.log, graph.json, graph.dot, metrics.csv, summary.json.
RunResult run_loop(const RunConfig& config, const std::filesystem::path& out_dir);

struct WindowMetrics {
  std::uint64_t start = 0;
  std::uint64_t end = 0;  // exclusive
  double direct = 0;
  double reuse = 0;
  double composition = 0;
  double fail = 0;
  double schema_correct = 0;
  std::uint64_t promotions = 0;
  double audited_improvement_rate = 0;

  bool operator==(const WindowMetrics&) const = default;
};

struct RetentionPoint {
  std::uint64_t episode = 0;
  std::uint64_t nodes = 0;
  std::uint64_t passed = 0;
  double pass_rate = 1.0;

  bool operator==(const RetentionPoint&) const = default;
};

struct PhaseChange {
  std::uint64_t episode = 0;
  int phase = 1;

  bool operator==(const PhaseChange&) const = default;
};

struct MetricsSummary {
  std::uint64_t episodes = 0;
  std::uint64_t window = 0;
  std::uint64_t promoted = 0;
  std::uint64_t retired = 0;
  std::vector<PhaseChange> phase_changes;
  std::uint64_t parity_matched = 0;
  std::uint64_t parity_total = 0;
  double reconstruction_parity_rate = 0;
  std::vector<WindowMetrics> windows;
  std::vector<RetentionPoint> retention;

  bool operator==(const MetricsSummary&) const = default;
};

/// Reuse outcomes of promoted skills: per skill, episodes that selected it
/// and how many of those succeeded.
struct ReuseTally {
  std::uint64_t invocations = 0;
  std::uint64_t successes = 0;
};

/// Window metrics from the persisted records. `promotion_episodes` are the
/// source episodes of each promotion, keyed by skill_id.
MetricsSummary compute_metrics(const std::vector<EpisodeRecord>& records, const std::vector<RegressionReport>& sweeps,
                               const std::map<Digest, std::uint64_t>& promotion_episodes,
                               const std::map<Digest, ReuseTally>& reuse, std::uint64_t window);

std::string metrics_csv(const MetricsSummary& summary);

/// Re-derives everything from a run directory: verifies the chain and HEAD,
/// rebuilds the graph from the log, reconstructs every episode's reward,
/// writes metrics.csv and summary.json. Throws IntegrityError when the chain
/// fails; parity failures are reported in the summary.
MetricsSummary report(const std::filesystem::path& run_dir, std::uint64_t window);

/// Audit directory of a run directory (or the directory itself if it holds segments).
std::filesystem::path audit_dir_of(const std::filesystem::path& dir);

Json to_canon(const ScheduleEntry& e);
void from_canon(const Json& j, ScheduleEntry& out);
Json to_canon(const RunConfig& c);
void from_canon(const Json& j, RunConfig& out);
Json to_canon(Attribution a);
void from_canon(const Json& j, Attribution& out);
Json to_canon(const EpisodeRecord& r);
void from_canon(const Json& j, EpisodeRecord& out);
Json to_canon(const TrajectoryRecord& r);
void from_canon(const Json& j, TrajectoryRecord& out);
Json to_canon(const WindowMetrics& w);
void from_canon(const Json& j, WindowMetrics& out);
Json to_canon(const RetentionPoint& p);
void from_canon(const Json& j, RetentionPoint& out);
Json to_canon(const PhaseChange& p);
void from_canon(const Json& j, PhaseChange& out);
Json to_canon(const MetricsSummary& s);
void from_canon(const Json& j, MetricsSummary& out);

}  // namespace skillaudit
