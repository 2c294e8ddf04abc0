#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "cmrl/memory.hpp"
#include "cmrl/planner.hpp"
#include "cmrl/trajectory_store.hpp"

namespace cmrl {

using Cell = std::array<int, 3>;

/// Actions: 0 +x, 1 -x, 2 +y, 3 -y, 4 +z, 5 -z.
inline constexpr int kMoveActions = 6;

struct PaintingConfig {
  std::array<int, 3> grid{5, 5, 5};
  Cell bucket{0, 0, 0};
  Cell canvas{4, 4, 4};
  std::size_t horizon = 100;
  std::uint64_t seed = 0;
};

struct TireConfig {
  std::array<int, 3> grid{5, 5, 1};
  std::array<Cell, 4> lugs{{{1, 1, 0}, {1, 3, 0}, {3, 1, 0}, {3, 3, 0}}};
  Cell center{2, 2, 0};
  std::size_t horizon = 100;
  bool terminal_on_success = true;
  std::uint64_t seed = 0;
};

void validate_config(const PaintingConfig& cfg);
void validate_config(const TireConfig& cfg);

struct EnvState {
  Cell pos{0, 0, 0};
  std::vector<int> latches;  // hidden ground truth
  std::size_t t = 0;
  bool done = false;
};

struct StepResult {
  EnvState state;
  std::vector<std::vector<double>> obs;
  double reward = 0.0;
};

/// Gridworld whose only hidden state is a set of monotone latches.
///
/// Painting: one latch set in the bucket cell; reward 1 whenever the brush
/// occupies the canvas cell after the latch is set. Tire: one latch per lug
/// cell; reward 1 on occupying the centre cell with every latch set, which
/// ends the episode when terminal_on_success holds.
class LatchEnv {
 public:
  explicit LatchEnv(const PaintingConfig& cfg);
  explicit LatchEnv(const TireConfig& cfg);

  const AttributeSchema& schema() const { return schema_; }
  std::size_t horizon() const { return horizon_; }
  bool terminal_on_success() const { return terminal_; }
  void set_terminal_on_success(bool v) { terminal_ = v; }
  const std::vector<Cell>& trigger_cells() const { return triggers_; }
  const Cell& goal_cell() const { return goal_; }

  /// Uniform random start cell; a latch whose cell is the start is set.
  EnvState reset(std::mt19937_64& rng) const;
  std::vector<std::vector<double>> observe(const EnvState& s, double reward) const;
  StepResult step(const EnvState& s, int action) const;

  /// Unit balls (radius 0.5) placed on the true trigger cells.
  std::vector<MemoryUnit> ground_truth_units() const;
  std::vector<double> position_of(const Cell& c) const;
  std::size_t cell_count() const;

 private:
  void build_schema();

  std::array<int, 3> grid_;
  std::vector<Cell> triggers_;
  Cell goal_;
  std::size_t horizon_;
  bool terminal_ = false;
  bool painting_ = true;
  std::vector<std::size_t> axes_;  // axes with extent > 1
  AttributeSchema schema_;
};

/// Placement 0 is the default geometry; others are seeded random placements.
/// Random painting placements keep the canvas at least
/// min_painting_separation(grid) steps (Manhattan) from the bucket.
int min_painting_separation(const std::array<int, 3>& grid);
PaintingConfig painting_placement(int placement, std::uint64_t seed, PaintingConfig base = {});
TireConfig tire_placement(int placement, std::uint64_t seed, TireConfig base = {});

/// L episodes under the uniform random policy, each h + 1 steps long.
/// Termination is not applied while collecting. Episode l draws from an RNG
/// stream seeded by (seed, l).
Dataset collect_random(const LatchEnv& env, std::size_t episodes, std::uint64_t seed);

/// Same as collect_random but also returns the hidden latch bits per step.
struct TracedDataset {
  Dataset data;
  std::vector<std::vector<std::vector<int>>> latches;  // [l][t][k]
};
TracedDataset collect_random_traced(const LatchEnv& env, std::size_t episodes, std::uint64_t seed);

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void reset() = 0;
  virtual int act(Observation obs) = 0;
};

/// Greedy policy over a tracked state; unknown states take action 0.
class PolicyAgent final : public Agent {
 public:
  PolicyAgent(const PolicyTable& policy, StateTracker& tracker);
  void reset() override;
  int act(Observation obs) override;

 private:
  const PolicyTable* policy_;
  StateTracker* tracker_;
};

class RandomAgent final : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
  void reset() override {}
  int act(Observation) override;

 private:
  std::mt19937_64 rng_;
};

struct EpisodeResult {
  double total_reward = 0.0;
  std::size_t steps = 0;
  bool success = false;
};

struct EvaluationSummary {
  std::size_t episodes = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
};

EpisodeResult run_episode(const LatchEnv& env, Agent& agent, std::mt19937_64& rng);
EvaluationSummary evaluate_policy(const LatchEnv& env, Agent& agent, std::size_t episodes,
                                  std::uint64_t seed);

struct ClassMetrics {
  std::uint64_t tp = 0, fp = 0, fn = 0;
  std::optional<double> recall;     // undefined when the class never occurs
  std::optional<double> precision;  // undefined when the class is never predicted
};

struct RewardMetrics {
  std::array<ClassMetrics, 2> classes;
  /// Throws ClassAbsent if the requested value is undefined.
  double recall(int c) const;
  double precision(int c) const;
};

/// Predicts R_{t+1} for every test step from the tracked state and a_t.
RewardMetrics reward_metrics(const TabularModel& m, StateTracker& tracker, const Dataset& test);

}  // namespace cmrl
