#include "skillaudit/reward.h"

#include <cmath>
#include <string>

namespace skillaudit {

void PhaseWeights::validate() const {
  for (std::size_t p = 0; p < phases.size(); ++p) {
    double sum = 0.0;
    for (const double w : phases[p]) {
      if (!std::isfinite(w) || w < 0.0) {
        throw std::invalid_argument("phase " + std::to_string(p + 1) + " has a negative or non-finite weight");
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
      throw std::invalid_argument("phase " + std::to_string(p + 1) + " weights sum to " + std::to_string(sum));
    }
  }
  if (!std::isfinite(lambda) || lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
}

const std::array<double, 5>& PhaseWeights::of(int phase) const {
  if (phase < 1 || phase > 3) throw std::invalid_argument("unknown phase " + std::to_string(phase));
  return phases[static_cast<std::size_t>(phase - 1)];
}

RewardComponents compute_components(const Trajectory& trajectory, const GraphState& graph, int phase,
                                    const PhaseWeights& weights) {
  const auto& w = weights.of(phase);
  RewardComponents c;
  c.phase = phase;

  std::size_t checks = 0;
  std::size_t passed = 0;
  const auto count = [&](const std::vector<CheckResult>& list) {
    for (const auto& r : list) {
      ++checks;
      passed += r.passed ? 1 : 0;
    }
  };
  bool notes_ok = true;
  bool chain_ok = false;
  for (const auto& step : trajectory.steps) {
    if (const auto* t = std::get_if<ToolCallStep>(&step)) {
      count(t->schema_checks);
      count(t->contract_checks);
    } else if (const auto* s = std::get_if<SkillCallStep>(&step)) {
      count(s->internal_contract_checks);
      const SkillNode* node = graph.find(s->skill_id);
      if (s->pre_ok && s->post_ok && node && node->status == SkillStatus::kPromoted) c.reuse = 1;
      if (node && node->program.steps.size() > 1 && is_ok(s->result) && s->post_ok &&
          all_passed(s->internal_contract_checks)) {
        chain_ok = true;
      }
    } else if (const auto* m = std::get_if<MemoryWriteStep>(&step)) {
      notes_ok = notes_ok && m->note.size() <= kMaxNoteChars;
    }
  }
  if (std::holds_alternative<Compose>(trajectory.action)) {
    bool completed = trajectory.final_answer.has_value();
    std::size_t calls = 0;
    for (const auto& step : trajectory.steps) {
      const auto* t = std::get_if<ToolCallStep>(&step);
      if (t == nullptr) continue;
      ++calls;
      completed = completed && all_passed(t->contract_checks);
    }
    if (completed && calls >= 2) chain_ok = true;
  }

  c.validity = checks == 0 ? 1.0 : static_cast<double>(passed) / static_cast<double>(checks);
  c.outcome = trajectory.outcome_correct ? 1 : 0;
  c.composition = chain_ok ? 1 : 0;
  c.memory = notes_ok && trajectory.context_chars <= kMaxContextChars ? 1 : 0;
  const std::size_t steps = action_step_count(trajectory);
  c.step_penalty = weights.lambda * static_cast<double>(steps > 0 ? steps - 1 : 0);
  c.total = w[0] * c.validity + w[1] * c.outcome + w[2] * c.reuse + w[3] * c.composition + w[4] * c.memory -
            c.step_penalty;
  return c;
}

int update_phase(const std::deque<RewardComponents>& history, int phase, const PhaseSchedule& schedule) {
  if (phase >= 3 || schedule.window == 0 || history.size() < schedule.window) return phase;
  double v = 0.0;
  double o = 0.0;
  for (auto it = history.end() - static_cast<std::ptrdiff_t>(schedule.window); it != history.end(); ++it) {
    v += it->validity;
    o += it->outcome;
  }
  const double n = static_cast<double>(schedule.window);
  if (phase == 1 && v / n >= schedule.validity_threshold) return 2;
  if (phase == 2 && o / n >= schedule.outcome_threshold) return 3;
  return phase;
}

RewardComponents reconstruct_reward(const Trajectory& trajectory, const GraphState& graph_as_of, int phase,
                                    const PhaseWeights& weights) {
  for (const auto& step : trajectory.steps) {
    const auto* s = std::get_if<SkillCallStep>(&step);
    if (s && graph_as_of.find(s->skill_id) == nullptr) {
      throw ProvenanceError("episode " + std::to_string(trajectory.episode_index) + " calls skill " +
                            s->skill_id.short_hex() + " with no promotion effective by then");
    }
  }
  if (const auto* use = std::get_if<UseSkill>(&trajectory.action); use && !graph_as_of.find(use->skill_id)) {
    throw ProvenanceError("episode " + std::to_string(trajectory.episode_index) + " selected unpromoted skill " +
                          use->skill_id.short_hex());
  }
  return compute_components(trajectory, graph_as_of, phase, weights);
}

Json to_canon(const PhaseWeights& w) {
  Json j = Json::object();
  Json phases = Json::array();
  for (const auto& p : w.phases) {
    Json row = Json::array();
    for (const double x : p) row.push_back(x);
    phases.push_back(std::move(row));
  }
  j["phases"] = std::move(phases);
  j["lambda"] = w.lambda;
  return j;
}

void from_canon(const Json& j, PhaseWeights& out) {
  std::vector<std::vector<double>> rows;
  read_field(j, "phases", rows);
  if (rows.size() != 3) throw DecodeError("phases", "expected three phases");
  for (std::size_t p = 0; p < 3; ++p) {
    if (rows[p].size() != 5) throw DecodeError("phases", "each phase needs five weights");
    for (std::size_t i = 0; i < 5; ++i) out.phases[p][i] = rows[p][i];
  }
  read_field(j, "lambda", out.lambda);
}

Json to_canon(const RewardComponents& c) {
  Json j = Json::object();
  j["validity"] = c.validity;
  j["outcome"] = c.outcome;
  j["reuse"] = c.reuse;
  j["composition"] = c.composition;
  j["memory"] = c.memory;
  j["step_penalty"] = c.step_penalty;
  j["total"] = c.total;
  j["phase"] = c.phase;
  return j;
}

void from_canon(const Json& j, RewardComponents& out) {
  read_field(j, "validity", out.validity);
  read_field(j, "outcome", out.outcome);
  read_field(j, "reuse", out.reuse);
  read_field(j, "composition", out.composition);
  read_field(j, "memory", out.memory);
  read_field(j, "step_penalty", out.step_penalty);
  read_field(j, "total", out.total);
  read_field(j, "phase", out.phase);
}

Json to_canon(const PhaseSchedule& s) {
  Json j = Json::object();
  j["window"] = static_cast<std::uint64_t>(s.window);
  j["validity_threshold"] = s.validity_threshold;
  j["outcome_threshold"] = s.outcome_threshold;
  return j;
}

void from_canon(const Json& j, PhaseSchedule& out) {
  std::uint64_t window = 0;
  read_field(j, "window", window);
  out.window = static_cast<std::size_t>(window);
  read_field(j, "validity_threshold", out.validity_threshold);
  read_field(j, "outcome_threshold", out.outcome_threshold);
}

}  // namespace skillaudit
