#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "cmrl/discovery.hpp"
#include "cmrl/planner.hpp"
#include "cmrl/sim.hpp"

namespace cmrl {

enum class Method { full, markov, stacking };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// A fitted model plus its greedy policy, ready to drive an agent.
class LearnedAgent {
 public:
  /// Memory-augmented model; `units` may be empty (the Markov model).
  static LearnedAgent memory(const Dataset& d, std::vector<MemoryUnit> units,
                             const PlannerConfig& cfg = {});
  /// States extended by the last `window` (cell, action) pairs.
  static LearnedAgent stacking(const Dataset& d, std::size_t window, const PlannerConfig& cfg = {});
  /// Reassembles a saved agent; `keys` is only used when `stacked`.
  static LearnedAgent restore(const AttributeSchema& schema, std::vector<MemoryUnit> units, bool stacked,
                              std::size_t window, const std::vector<HistoryStateIndex::Key>& keys,
                              TabularModel model, PlanResult plan);

  const TabularModel& model() const { return model_; }
  const PlanResult& plan() const { return plan_; }
  const std::vector<MemoryUnit>& units() const { return units_; }
  const AugmentedStateIndex& index() const { return *index_; }
  const AttributeSchema& schema() const { return schema_; }
  bool stacked() const { return history_ != nullptr; }
  std::size_t window() const { return window_; }
  /// Null unless stacked().
  const HistoryStateIndex* history() const { return history_.get(); }

  /// A fresh tracker over this agent's state space.
  std::unique_ptr<StateTracker> tracker() const;

  EvaluationSummary evaluate(const LatchEnv& env, std::size_t episodes, std::uint64_t seed) const;
  RewardMetrics score(const Dataset& test) const;

 private:
  LearnedAgent() = default;

  AttributeSchema schema_;
  std::vector<MemoryUnit> units_;
  std::size_t window_ = 0;
  std::shared_ptr<const AugmentedStateIndex> index_;
  std::shared_ptr<const HistoryStateIndex> history_;
  TabularModel model_;
  PlanResult plan_;
};

/// Grid over the observable attributes with one bin per integer value.
GridSpec observable_grid(const AttributeSchema& schema);

}  // namespace cmrl
