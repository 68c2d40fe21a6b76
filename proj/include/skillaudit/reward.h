#pragma once

// Phase-weighted reward decomposition and its reconstruction from artifacts.

#include <array>
#include <deque>
#include <stdexcept>

#include "skillaudit/policy.h"
#include "skillaudit/skill_graph.h"

namespace skillaudit {

/// (w_v, w_o, w_r, w_c, w_m) for phases 1..3 plus the step-penalty rate.
struct PhaseWeights {
  std::array<std::array<double, 5>, 3> phases{{{0.6, 0.3, 0.0, 0.0, 0.1},
                                               {0.2, 0.6, 0.1, 0.0, 0.1},
                                               {0.1, 0.4, 0.2, 0.2, 0.1}}};
  double lambda = 0.05;

  /// Throws std::invalid_argument unless every phase is non-negative and sums to 1.
  void validate() const;
  const std::array<double, 5>& of(int phase) const;

  bool operator==(const PhaseWeights&) const = default;
};

inline constexpr double kWeightSumTolerance = 1e-9;
inline constexpr std::size_t kMaxContextChars = 1024;

struct RewardComponents {
  double validity = 1.0;
  int outcome = 0;
  int reuse = 0;
  int composition = 0;
  int memory = 1;
  double step_penalty = 0.0;
  double total = 0.0;
  int phase = 1;

  bool operator==(const RewardComponents&) const = default;
};

/// `graph` is the snapshot the episode ran against.
RewardComponents compute_components(const Trajectory& trajectory, const GraphState& graph, int phase,
                                    const PhaseWeights& weights);

struct PhaseSchedule {
  std::size_t window = 50;
  double validity_threshold = 0.9;
  double outcome_threshold = 0.7;

  bool operator==(const PhaseSchedule&) const = default;
};

/// Monotone phase transition over the trailing window of components.
int update_phase(const std::deque<RewardComponents>& history, int phase, const PhaseSchedule& schedule);

class ProvenanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recomputes components from a persisted trajectory and the graph as of its
/// episode. Throws ProvenanceError when a SkillCall cites a skill with no
/// promotion effective by then.
RewardComponents reconstruct_reward(const Trajectory& trajectory, const GraphState& graph_as_of, int phase,
                                    const PhaseWeights& weights);

Json to_canon(const PhaseWeights& w);
void from_canon(const Json& j, PhaseWeights& out);
Json to_canon(const RewardComponents& c);
void from_canon(const Json& j, RewardComponents& out);
Json to_canon(const PhaseSchedule& s);
void from_canon(const Json& j, PhaseSchedule& out);

}  // namespace skillaudit
