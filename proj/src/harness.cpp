#include "skillaudit/harness.h"

#include <cmath>
#include <deque>
#include <fstream>
#include <set>

namespace skillaudit {
namespace fs = std::filesystem;
namespace {

// Overlays user-supplied keys on the defaults; nested records merge per key.
void overlay(Json& base, const Json& user, const std::string& path) {
  for (const auto& [key, value] : user.items()) {
    if (!base.contains(key)) throw std::invalid_argument("unknown config key '" + path + key + "'");
    if (base[key].is_object() && value.is_object()) {
      overlay(base[key], value, path + key + ".");
    } else {
      base[key] = value;
    }
  }
}

class Appender {
 public:
  explicit Appender(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw RunIoError("cannot create " + path.string());
  }
  void line(const std::string& text) {
    out_ << text << '\n';
    if (!out_) throw RunIoError("write to " + path_.string() + " failed");
  }
  void close() {
    out_.flush();
    if (!out_) throw RunIoError("flush of " + path_.string() + " failed");
    out_.close();
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw RunIoError("cannot write " + path.string());
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) throw RunIoError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir, ec)) throw RunIoError("output directory " + dir.string() + " is not empty");
  }
  fs::create_directories(dir, ec);
  if (ec) throw RunIoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<ScheduleEntry> RunConfig::default_schedule() {
  return {ScheduleEntry{0, {{"SUM", 1.0}, {"PRODUCT", 1.0}, {"REVERSE", 1.0}}},
          ScheduleEntry{300, {{"SHOUT", 1.0}, {"SUM_REPORT", 1.0}, {"JOIN_LOUD", 1.0}}}};
}

void RunConfig::validate() const {
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(episodes > phase.window, "episodes must exceed the phase window");
  require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0, 1]");
  require(epsilon_decay > 0.0 && epsilon_decay <= 1.0, "epsilon_decay must lie in (0, 1]");
  require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
  require(max_steps >= 1, "max_steps must be at least 1");
  require(memory_capacity >= 1, "memory_capacity must be at least 1");
  require(suite.holdout_n >= 1, "suite.holdout_n must be at least 1");
  require(suite.theta > 0.0 && suite.theta <= 1.0, "suite.theta must lie in (0, 1]");
  weights.validate();
  require(!schedule.empty(), "schedule must not be empty");
  require(schedule.front().start_episode == 0, "schedule must start at episode 0");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i > 0) require(schedule[i].start_episode > schedule[i - 1].start_episode, "schedule starts must increase");
    double total = 0.0;
    for (const auto& [kind, w] : schedule[i].mix) {
      task_kind_from_string(kind);
      require(std::isfinite(w) && w >= 0.0, "schedule weights must be non-negative");
      total += w;
    }
    require(total > 0.0, "schedule mix must not be all zero");
  }
  require(regression_period >= 1, "regression_period must be at least 1");
  require(metrics_window >= 1, "metrics_window must be at least 1");
  require(skill_pref_init == "inherit" || skill_pref_init == "zero", "skill_pref_init must be inherit or zero");
}

RunConfig parse_config(std::string_view text) {
  Json user;
  try {
    user = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) throw std::invalid_argument("config must be an object");
  Json full = to_canon(RunConfig{});
  overlay(full, user, "");
  RunConfig config;
  try {
    from_canon(full, config);
  } catch (const DecodeError& e) {
    throw std::invalid_argument(std::string("bad config: ") + e.what());
  }
  config.validate();
  return config;
}

const std::map<std::string, double>& apply_drift(const std::vector<ScheduleEntry>& schedule, std::uint64_t episode) {
  if (schedule.empty()) throw std::invalid_argument("empty schedule");
  const ScheduleEntry* active = &schedule.front();
  for (const auto& entry : schedule) {
    if (entry.start_episode <= episode) active = &entry;
  }
  return active->mix;
}

TaskKind sample_kind(const std::map<std::string, double>& mix, Draw& draw) {
  double total = 0.0;
  std::vector<std::pair<TaskKind, double>> weights;
  for (const TaskKind kind : all_task_kinds()) {
    const auto it = mix.find(std::string(to_string(kind)));
    if (it == mix.end() || it->second <= 0.0) continue;
    weights.emplace_back(kind, it->second);
    total += it->second;
  }
  if (weights.empty()) throw std::invalid_argument("kind mix has no positive weight");
  const double u = draw.uniform_real() * total;
  double acc = 0.0;
  for (const auto& [kind, w] : weights) {
    acc += w;
    if (u < acc) return kind;
  }
  return weights.back().first;
}

std::string_view to_string(Attribution a) {
  switch (a) {
    case Attribution::kDirect: return "DIRECT";
    case Attribution::kReuse: return "REUSE";
    case Attribution::kComposition: return "COMPOSITION";
    case Attribution::kFail: return "FAIL";
  }
  throw std::logic_error("unhandled attribution");
}

Attribution attribute(const RewardComponents& c) {
  if (c.outcome == 0) return Attribution::kFail;
  if (c.reuse == 1) return Attribution::kReuse;
  if (c.composition == 1) return Attribution::kComposition;
  return Attribution::kDirect;
}

fs::path audit_dir_of(const fs::path& dir) {
  std::error_code ec;
  if (fs::is_directory(dir / "audit", ec)) return dir / "audit";
  return dir;
}

RunResult run_loop(const RunConfig& config, const fs::path& out_dir) {
  config.validate();
  prepare_out_dir(out_dir);
  const std::string config_bytes = canonical_encode(config);
  write_text(out_dir / "config.json", config_bytes);

  AuditLog log(out_dir / "audit");
  log.append(PayloadKind::kConfig, config_bytes);

  const Environment env;
  const ToolRegistry& registry = env.tools();
  SkillGraph graph(registry);
  PolicyState policy;
  MemoryStore memory(config.memory_capacity);
  const VerifierConfig verifier{config.suite};
  int phase = 1;
  std::deque<RewardComponents> history;
  std::set<std::pair<Digest, TaskKind>> seen;

  Appender trajectories(out_dir / "trajectories.log");
  Appender episodes(out_dir / "episodes.log");
  Appender candidates(out_dir / "candidates.log");

  const RandomStream train(config.seed, "train");
  const RandomStream select(config.seed, "policy/select");
  const RandomStream schedule(config.seed, "schedule");

  RunResult result;
  result.dir = out_dir;
  std::uint64_t e = 0;
  try {
    for (; e < config.episodes; ++e) {
      const GraphState view_graph = graph.snapshot()->as_of(e);
      Draw kind_draw = schedule.draw(e);
      const TaskKind kind = sample_kind(apply_drift(config.schedule, e), kind_draw);
      const Task task = gen_task(kind, train, e);
      const TaskView view = task.view();
      const EpisodeConfig episode_config{config.max_steps,
                                         config.epsilon * std::pow(config.epsilon_decay, static_cast<double>(e))};
      const OutcomeOracle oracle = [&task](const Value& answer) { return verify_outcome(task, answer); };

      const Trajectory traj =
          execute_episode(view, policy, view_graph, registry, memory, episode_config, select, e, oracle);
      const RewardComponents comps = compute_components(traj, view_graph, phase, config.weights);
      update_policy(policy, kind, traj.action, comps.total, config.alpha);
      trajectories.line(canonical_encode(TrajectoryRecord{e, traj, comps}));

      for (const auto& candidate : extract_candidates(traj, view, registry)) {
        if (!seen.insert({candidate.skill_id, kind}).second) continue;
        const EvidenceBundle bundle = verify_candidate(candidate, env, verifier, log);
        Json line = Json::object();
        line["episode"] = e;
        line["candidate"] = to_canon(candidate);
        line["bundle_hash"] = to_canon(bundle.bundle_hash);
        line["decision"] = to_canon(bundle.decision);
        candidates.line(canonical_dump(line));
        if (bundle.decision != Decision::kPass || graph.snapshot()->find(candidate.skill_id)) continue;

        SkillNode node;
        node.skill_id = candidate.skill_id;
        node.program = candidate.program;
        node.interface = candidate.interface;
        graph.promote(node, bundle.bundle_hash, e + 1, log);
        ++result.promotions;
        if (config.skill_pref_init == "inherit") {
          for (const TaskKind k : candidate.interface.applicable_kinds) {
            const auto src = policy.prefs.find(PolicyState::key(k, traj.action));
            if (src != policy.prefs.end()) policy.prefs.emplace(PolicyState::key(k, UseSkill{node.skill_id}), src->second);
          }
        }
      }

      EpisodeRecord record{e,           phase, kind, template_key(traj.action), comps, attribute(comps), result.promotions,
                           view_graph.promoted_count()};
      episodes.line(canonical_encode(record));

      history.push_back(comps);
      if (history.size() > config.phase.window) history.pop_front();
      phase = update_phase(history, phase, config.phase);

      if ((e + 1) % config.regression_period == 0) {
        result.retirements += regression_sweep(graph, env, e + 1, log).retired.size();
      }
    }
  } catch (const AuditIoError& err) {
    trajectories.close();
    episodes.close();
    candidates.close();
    throw RunIoError("run aborted at episode " + std::to_string(e) + " with " + std::to_string(e) +
                     " episodes persisted and " + std::to_string(log.size()) + " audit entries: " + err.what());
  }
  trajectories.close();
  episodes.close();
  candidates.close();

  const auto final_graph = graph.snapshot();
  write_text(out_dir / "graph.json", export_canonical(*final_graph));
  write_text(out_dir / "graph.dot", export_dot(*final_graph));
  result.episodes = config.episodes;
  result.audit_entries = log.size();
  report(out_dir, config.metrics_window);
  return result;
}

// ---- codecs ----

Json to_canon(const ScheduleEntry& e) {
  Json j = Json::object();
  j["start_episode"] = e.start_episode;
  j["mix"] = to_canon(e.mix);
  return j;
}

void from_canon(const Json& j, ScheduleEntry& out) {
  read_field(j, "start_episode", out.start_episode);
  read_field(j, "mix", out.mix);
}

Json to_canon(const RunConfig& c) {
  Json j = Json::object();
  j["seed"] = c.seed;
  j["episodes"] = c.episodes;
  j["epsilon"] = c.epsilon;
  j["epsilon_decay"] = c.epsilon_decay;
  j["alpha"] = c.alpha;
  j["max_steps"] = c.max_steps;
  j["memory_capacity"] = c.memory_capacity;
  j["phase"] = to_canon(c.phase);
  j["suite"] = to_canon(c.suite);
  j["weights"] = to_canon(c.weights);
  j["schedule"] = to_canon(c.schedule);
  j["regression_period"] = c.regression_period;
  j["metrics_window"] = c.metrics_window;
  j["skill_pref_init"] = c.skill_pref_init;
  return j;
}

void from_canon(const Json& j, RunConfig& out) {
  read_field(j, "seed", out.seed);
  read_field(j, "episodes", out.episodes);
  read_field(j, "epsilon", out.epsilon);
  read_field(j, "epsilon_decay", out.epsilon_decay);
  read_field(j, "alpha", out.alpha);
  read_field(j, "max_steps", out.max_steps);
  read_field(j, "memory_capacity", out.memory_capacity);
  read_field(j, "phase", out.phase);
  read_field(j, "suite", out.suite);
  read_field(j, "weights", out.weights);
  read_field(j, "schedule", out.schedule);
  read_field(j, "regression_period", out.regression_period);
  read_field(j, "metrics_window", out.metrics_window);
  read_field(j, "skill_pref_init", out.skill_pref_init);
}

Json to_canon(Attribution a) { return Json(std::string(to_string(a))); }

void from_canon(const Json& j, Attribution& out) {
  const std::string name = decode_string(j);
  for (const auto a : {Attribution::kDirect, Attribution::kReuse, Attribution::kComposition, Attribution::kFail}) {
    if (to_string(a) == name) {
      out = a;
      return;
    }
  }
  throw DecodeError("", "unknown attribution '" + name + "'");
}

Json to_canon(const EpisodeRecord& r) {
  Json j = Json::object();
  j["episode"] = r.episode;
  j["phase"] = r.phase;
  j["kind"] = to_canon(r.kind);
  j["template_key"] = to_canon(r.template_key);
  j["components"] = to_canon(r.components);
  j["attribution"] = to_canon(r.attribution);
  j["promotions_so_far"] = r.promotions_so_far;
  j["graph_size"] = r.graph_size;
  return j;
}

void from_canon(const Json& j, EpisodeRecord& out) {
  read_field(j, "episode", out.episode);
  read_field(j, "phase", out.phase);
  read_field(j, "kind", out.kind);
  read_field(j, "template_key", out.template_key);
  read_field(j, "components", out.components);
  read_field(j, "attribution", out.attribution);
  read_field(j, "promotions_so_far", out.promotions_so_far);
  read_field(j, "graph_size", out.graph_size);
}

Json to_canon(const TrajectoryRecord& r) {
  Json j = Json::object();
  j["episode"] = r.episode;
  j["trajectory"] = to_canon(r.trajectory);
  j["components"] = to_canon(r.components);
  return j;
}

void from_canon(const Json& j, TrajectoryRecord& out) {
  read_field(j, "episode", out.episode);
  read_field(j, "trajectory", out.trajectory);
  read_field(j, "components", out.components);
}

}  // namespace skillaudit
