#include "cmrl/pipeline.hpp"

#include "cmrl/error.hpp"
#include "cmrl/memory.hpp"

namespace cmrl {

std::string to_string(Method m) {
  switch (m) {
    case Method::full: return "full";
    case Method::markov: return "markov";
    case Method::stacking: return "stacking";
  }
  return "full";
}

Method method_from_string(const std::string& s) {
  if (s == "full") return Method::full;
  if (s == "markov") return Method::markov;
  if (s == "stacking") return Method::stacking;
  throw ConfigError("unknown method '" + s + "'");
}

GridSpec observable_grid(const AttributeSchema& schema) { return GridSpec::defaults(schema); }

LearnedAgent LearnedAgent::memory(const Dataset& d, std::vector<MemoryUnit> units,
                                  const PlannerConfig& cfg) {
  validate_dataset(d);
  validate_units(units, d.schema);
  LearnedAgent out;
  out.schema_ = d.schema;
  out.index_ = std::make_shared<const AugmentedStateIndex>(d.schema, observable_grid(d.schema),
                                                           units.size());
  out.model_ = fit_model(augment_dataset(d, units), *out.index_);
  out.plan_ = value_iteration(out.model_, cfg);
  out.units_ = std::move(units);
  return out;
}

LearnedAgent LearnedAgent::stacking(const Dataset& d, std::size_t window, const PlannerConfig& cfg) {
  validate_dataset(d);
  LearnedAgent out;
  out.schema_ = d.schema;
  const GridSpec grid = observable_grid(d.schema);
  out.index_ = std::make_shared<const AugmentedStateIndex>(d.schema, grid, 0);
  StackedModel sm = history_stacking_model(d, window, grid);
  out.history_ = std::make_shared<const HistoryStateIndex>(std::move(sm.index));
  out.model_ = std::move(sm.model);
  out.plan_ = value_iteration(out.model_, cfg);
  out.window_ = window;
  return out;
}

LearnedAgent LearnedAgent::restore(const AttributeSchema& schema, std::vector<MemoryUnit> units,
                                   bool stacked, std::size_t window,
                                   const std::vector<HistoryStateIndex::Key>& keys, TabularModel model,
                                   PlanResult plan) {
  validate_schema(schema);
  validate_units(units, schema);
  validate_model(model);
  LearnedAgent out;
  out.schema_ = schema;
  const GridSpec grid = observable_grid(schema);
  if (stacked) {
    if (!units.empty()) throw ConfigError("a stacking agent has no memory units");
    out.index_ = std::make_shared<const AugmentedStateIndex>(schema, grid, 0);
    auto history = std::make_shared<HistoryStateIndex>(schema, grid, window);
    for (const auto& k : keys) {
      if (k.size() != 1 + 2 * window) throw DimensionMismatch("history key length");
      history->insert(k);
    }
    if (history->size() != keys.size()) throw DimensionMismatch("duplicate history keys");
    out.history_ = std::move(history);
    out.window_ = window;
    if (model.states != out.history_->size()) throw DimensionMismatch("model size differs from history keys");
  } else {
    out.index_ = std::make_shared<const AugmentedStateIndex>(schema, grid, units.size());
    if (model.states != out.index_->size()) throw DimensionMismatch("model size differs from state index");
  }
  if (plan.policy.action.size() != model.states || plan.values.values.size() != model.states)
    throw DimensionMismatch("policy size differs from model");
  out.units_ = std::move(units);
  out.model_ = std::move(model);
  out.plan_ = std::move(plan);
  return out;
}

std::unique_ptr<StateTracker> LearnedAgent::tracker() const {
  if (history_) return std::make_unique<HistoryTracker>(*history_);
  return std::make_unique<MemoryTracker>(*index_, units_);
}

EvaluationSummary LearnedAgent::evaluate(const LatchEnv& env, std::size_t episodes,
                                         std::uint64_t seed) const {
  auto tr = tracker();
  PolicyAgent agent(plan_.policy, *tr);
  return evaluate_policy(env, agent, episodes, seed);
}

RewardMetrics LearnedAgent::score(const Dataset& test) const {
  auto tr = tracker();
  return reward_metrics(model_, *tr, test);
}

}  // namespace cmrl
