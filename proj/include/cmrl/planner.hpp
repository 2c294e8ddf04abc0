#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cmrl/density.hpp"
#include "cmrl/memory.hpp"
#include "cmrl/trajectory_store.hpp"

namespace cmrl {

using Observation = std::span<const std::vector<double>>;

/// Flat ids for (observable cell, memory bits). The cell is the joint grid
/// bin of the first `observable` attributes; memory bits are the low digits.
class AugmentedStateIndex {
 public:
  AugmentedStateIndex(const AttributeSchema& observable_schema, GridSpec grid, std::size_t memory_bits);

  std::size_t cell_count() const { return cells_; }
  std::size_t memory_bits() const { return bits_; }
  std::size_t size() const { return cells_ << bits_; }
  std::size_t observable() const { return radix_.size(); }

  /// nullopt when an observable value falls outside the grid.
  std::optional<std::size_t> cell(Observation obs) const;
  std::optional<std::size_t> encode(Observation obs, const MemoryState& mem) const;
  /// Observation with memory columns appended (augment_dataset layout).
  std::optional<std::size_t> encode_augmented(Observation obs) const;
  std::pair<std::size_t, MemoryState> decode(std::size_t id) const;

 private:
  AttributeSchema schema_;
  GridSpec grid_;
  std::vector<std::size_t> radix_;
  std::size_t cells_ = 1;
  std::size_t bits_ = 0;
};

struct Outcome {
  std::size_t next = 0;
  double prob = 0.0;
  bool operator==(const Outcome&) const = default;
};

struct RewardMass {
  double value = 0.0;
  double prob = 0.0;
  bool operator==(const RewardMass&) const = default;
};

/// Maximum-likelihood transition and reward tables. Unvisited (s, a) pairs
/// are self-loops with reward 0 and visits == 0.
struct TabularModel {
  std::size_t states = 0;
  std::size_t actions = 0;
  std::vector<std::vector<Outcome>> transition;  // [s * actions + a]
  std::vector<std::vector<RewardMass>> reward;   // [s * actions + a]
  std::vector<std::uint64_t> visits;             // [s * actions + a]
  std::vector<char> terminal;                    // per state; V = 0 there

  std::size_t pair(std::size_t s, std::size_t a) const { return s * actions + a; }
  bool visited(std::size_t s, std::size_t a) const { return visits[pair(s, a)] > 0; }
  double expected_reward(std::size_t s, std::size_t a) const;

  bool operator==(const TabularModel&) const = default;
};

/// Accumulates (s, a, s', r) counts and emits a TabularModel.
class ModelBuilder {
 public:
  ModelBuilder(std::size_t states, std::size_t actions);
  void add(std::size_t s, std::size_t a, std::size_t next, double reward);
  TabularModel build() const;

 private:
  std::size_t states_;
  std::size_t actions_;
  std::vector<std::map<std::size_t, std::uint64_t>> next_;
  std::vector<std::map<double, std::uint64_t>> reward_;
};

void validate_model(const TabularModel& m);

/// Counts transitions of an augmented dataset (memory columns appended).
TabularModel fit_model(const Dataset& augmented, const AugmentedStateIndex& idx);

struct ValueTable {
  std::vector<double> values;
  double gamma = 0.99;
  double residual = 0.0;
  std::size_t sweeps = 0;
  std::vector<double> residual_history;
};

struct PolicyTable {
  std::vector<int> action;
  bool operator==(const PolicyTable&) const = default;
};

struct PlanResult {
  ValueTable values;
  PolicyTable policy;
};

struct PlannerConfig {
  double gamma = 0.99;
  double tolerance = 1e-8;
  std::size_t max_sweeps = 100000;
};

/// Bellman optimality sweeps until the max-norm residual is <= tolerance.
/// Throws NonconvergenceGuard after max_sweeps.
PlanResult value_iteration(const TabularModel& m, const PlannerConfig& cfg = {});

/// Q(s, a) under a value table.
double action_value(const TabularModel& m, const ValueTable& v, std::size_t s, std::size_t a);

/// Argmax of the learned reward distribution; ties and unvisited pairs give 0.
double predict_reward_class(const TabularModel& m, std::size_t s, std::size_t a);

/// Recovers the state id of the current step from the observation stream.
class StateTracker {
 public:
  virtual ~StateTracker() = default;
  virtual void reset() = 0;
  virtual std::optional<std::size_t> state(Observation obs) const = 0;
  virtual void advance(Observation obs, int action) = 0;
};

/// Rolls memory_step over observations; never looks at hidden state.
class MemoryTracker final : public StateTracker {
 public:
  MemoryTracker(const AugmentedStateIndex& idx, std::vector<MemoryUnit> units);
  void reset() override;
  std::optional<std::size_t> state(Observation obs) const override;
  void advance(Observation obs, int action) override;
  const MemoryState& memory() const { return mem_; }

 private:
  const AugmentedStateIndex* idx_;
  std::vector<MemoryUnit> units_;
  MemoryState mem_;
};

/// Action for an observation under a greedy policy; unknown states fall back
/// to action 0 and bump `unknown_state_count()`.
int greedy_action(const PolicyTable& pt, const AugmentedStateIndex& idx, Observation obs,
                  const MemoryState& mem);
std::uint64_t unknown_state_count();

// --- history stacking -------------------------------------------------------

/// Sparse ids for (current cell, last `window` (cell, action) pairs).
class HistoryStateIndex {
 public:
  using Key = std::vector<std::int64_t>;

  HistoryStateIndex(const AttributeSchema& observable_schema, GridSpec grid, std::size_t window);

  std::size_t window() const { return window_; }
  std::size_t size() const { return keys_.size(); }
  const std::vector<Key>& keys() const { return keys_; }
  const AugmentedStateIndex& cells() const { return cells_; }

  std::optional<std::size_t> find(const Key& key) const;
  std::size_t insert(const Key& key);

  /// Key at step t of an observation/action history (missing past is padded with -1).
  std::optional<Key> key(std::span<const std::int64_t> past_cells, std::span<const int> past_actions,
                         Observation obs) const;

 private:
  std::size_t window_;
  AugmentedStateIndex cells_;
  std::vector<Key> keys_;
  std::map<Key, std::size_t> ids_;
};

struct StackedModel {
  HistoryStateIndex index;
  TabularModel model;
};

StackedModel history_stacking_model(const Dataset& d, std::size_t window, const GridSpec& grid);

class HistoryTracker final : public StateTracker {
 public:
  explicit HistoryTracker(const HistoryStateIndex& idx);
  void reset() override;
  std::optional<std::size_t> state(Observation obs) const override;
  void advance(Observation obs, int action) override;

 private:
  const HistoryStateIndex* idx_;
  std::deque<std::int64_t> cells_;  // most recent first
  std::deque<int> actions_;
};

/// Schema restricted to its first `n` attributes.
AttributeSchema observable_prefix(const AttributeSchema& schema, std::size_t n);

}  // namespace cmrl
