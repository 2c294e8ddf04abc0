#include "cmrl/planner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>

#include "cmrl/error.hpp"

namespace cmrl {

namespace {

std::atomic<std::uint64_t> g_unknown_states{0};

void note_unknown_state() {
  if (g_unknown_states.fetch_add(1) == 0)
    std::cerr << "warning: observation maps to no known state; using action 0\n";
}

// Ties within this relative margin keep the lower action id.
bool better(double candidate, double incumbent) {
  return candidate > incumbent + 1e-12 * (1.0 + std::abs(incumbent));
}

}  // namespace

AttributeSchema observable_prefix(const AttributeSchema& schema, std::size_t n) {
  AttributeSchema out = schema;
  out.attributes.resize(std::min(n, schema.attributes.size()));
  return out;
}

// --- AugmentedStateIndex ----------------------------------------------------

AugmentedStateIndex::AugmentedStateIndex(const AttributeSchema& observable_schema, GridSpec grid,
                                         std::size_t memory_bits)
    : schema_(observable_schema), grid_(std::move(grid)), bits_(memory_bits) {
  if (bits_ > 24) throw ConfigError("too many memory units for a tabular state space");
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (schema_.attributes[i].kind != AttributeKind::integer_grid)
      throw SchemaViolation("planner needs integer-grid observables; '" +
                            schema_.attributes[i].name + "' is continuous");
    radix_.push_back(grid_.bin_count(i));
    cells_ *= radix_.back();
  }
}

std::optional<std::size_t> AugmentedStateIndex::cell(Observation obs) const {
  if (obs.size() < radix_.size()) return std::nullopt;
  std::size_t c = 0;
  for (std::size_t i = 0; i < radix_.size(); ++i) {
    const auto& spec = schema_.attributes[i];
    if (obs[i].size() != spec.dim) return std::nullopt;
    for (std::size_t j = 0; j < spec.dim; ++j)
      if (!(obs[i][j] >= spec.lower[j] && obs[i][j] <= spec.upper[j])) return std::nullopt;
    c = c * radix_[i] + grid_.bin(i, obs[i]);
  }
  return c;
}

std::optional<std::size_t> AugmentedStateIndex::encode(Observation obs, const MemoryState& mem) const {
  if (mem.bits.size() != bits_) return std::nullopt;
  const auto c = cell(obs);
  if (!c) return std::nullopt;
  std::size_t id = *c;
  for (int b : mem.bits) id = (id << 1) | (b ? 1u : 0u);
  return id;
}

std::optional<std::size_t> AugmentedStateIndex::encode_augmented(Observation obs) const {
  if (obs.size() != radix_.size() + bits_) return std::nullopt;
  MemoryState mem;
  for (std::size_t k = 0; k < bits_; ++k) mem.bits.push_back(obs[radix_.size() + k][0] != 0.0);
  return encode(obs.first(radix_.size()), mem);
}

std::pair<std::size_t, MemoryState> AugmentedStateIndex::decode(std::size_t id) const {
  if (id >= size()) throw IndexError("state id " + std::to_string(id));
  MemoryState mem = MemoryState::initial(bits_);
  for (std::size_t k = bits_; k-- > 0;) {
    mem.bits[k] = static_cast<int>(id & 1u);
    id >>= 1;
  }
  return {id, mem};
}

// --- TabularModel -----------------------------------------------------------

double TabularModel::expected_reward(std::size_t s, std::size_t a) const {
  double r = 0.0;
  for (const auto& rm : reward[pair(s, a)]) r += rm.value * rm.prob;
  return r;
}

ModelBuilder::ModelBuilder(std::size_t states, std::size_t actions)
    : states_(states), actions_(actions), next_(states * actions), reward_(states * actions) {}

void ModelBuilder::add(std::size_t s, std::size_t a, std::size_t next, double reward) {
  if (s >= states_ || next >= states_ || a >= actions_) throw IndexError("transition out of range");
  ++next_[s * actions_ + a][next];
  ++reward_[s * actions_ + a][reward];
}

TabularModel ModelBuilder::build() const {
  TabularModel m;
  m.states = states_;
  m.actions = actions_;
  m.transition.resize(states_ * actions_);
  m.reward.resize(states_ * actions_);
  m.visits.assign(states_ * actions_, 0);
  m.terminal.assign(states_, 0);
  for (std::size_t s = 0; s < states_; ++s) {
    for (std::size_t a = 0; a < actions_; ++a) {
      const std::size_t p = s * actions_ + a;
      std::uint64_t n = 0;
      for (const auto& [next, c] : next_[p]) n += c;
      m.visits[p] = n;
      if (n == 0) {
        m.transition[p] = {{s, 1.0}};
        m.reward[p] = {{0.0, 1.0}};
        continue;
      }
      const double inv = 1.0 / static_cast<double>(n);
      for (const auto& [next, c] : next_[p]) m.transition[p].push_back({next, c * inv});
      for (const auto& [r, c] : reward_[p]) m.reward[p].push_back({r, c * inv});
    }
  }
  return m;
}

void validate_model(const TabularModel& m) {
  const std::size_t n = m.states * m.actions;
  if (m.transition.size() != n || m.reward.size() != n || m.visits.size() != n ||
      m.terminal.size() != m.states)
    throw MalformedPmf("model tables have inconsistent sizes");
  for (std::size_t p = 0; p < n; ++p) {
    double t = 0.0, r = 0.0;
    for (const auto& o : m.transition[p]) {
      if (o.next >= m.states || !(o.prob >= 0.0)) throw MalformedPmf("bad transition entry");
      t += o.prob;
    }
    for (const auto& rm : m.reward[p]) {
      if (!(rm.prob >= 0.0)) throw MalformedPmf("bad reward entry");
      r += rm.prob;
    }
    if (std::abs(t - 1.0) > 1e-9 || std::abs(r - 1.0) > 1e-9)
      throw MalformedPmf("distribution for pair " + std::to_string(p) + " does not sum to 1");
  }
}

TabularModel fit_model(const Dataset& augmented, const AugmentedStateIndex& idx) {
  if (augmented.episodes.empty() || augmented.horizon == 0) throw EmptyDataset("nothing to fit");
  if (augmented.schema.size() != idx.observable() + idx.memory_bits())
    throw SchemaViolation("dataset attributes do not match the state index");
  const std::size_t reward_attr = augmented.schema.reward_attr;
  ModelBuilder b(idx.size(), static_cast<std::size_t>(augmented.schema.action_count));
  for (std::size_t l = 0; l < augmented.episodes.size(); ++l) {
    const auto& ep = augmented.episodes[l];
    for (std::size_t t = 0; t < augmented.horizon; ++t) {
      const auto s = idx.encode_augmented(ep[t].obs);
      const auto next = idx.encode_augmented(ep[t + 1].obs);
      if (!s || !next) throw SchemaViolation("observation outside the planner grid");
      b.add(*s, static_cast<std::size_t>(ep[t].action), *next, ep[t + 1].obs[reward_attr][0]);
    }
  }
  return b.build();
}

// --- value iteration --------------------------------------------------------

double action_value(const TabularModel& m, const ValueTable& v, std::size_t s, std::size_t a) {
  double q = m.expected_reward(s, a);
  for (const auto& o : m.transition[m.pair(s, a)])
    q += v.gamma * o.prob * (m.terminal[o.next] ? 0.0 : v.values[o.next]);
  return q;
}

PlanResult value_iteration(const TabularModel& m, const PlannerConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(cfg.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  validate_model(m);

  PlanResult out;
  ValueTable& v = out.values;
  v.gamma = cfg.gamma;
  v.values.assign(m.states, 0.0);
  std::vector<double> next(m.states, 0.0);
  for (;;) {
    if (v.sweeps >= cfg.max_sweeps)
      throw NonconvergenceGuard("residual " + std::to_string(v.residual) + " after " +
                                std::to_string(v.sweeps) + " sweeps");
    double residual = 0.0;
    for (std::size_t s = 0; s < m.states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < m.actions; ++a) best = std::max(best, action_value(m, v, s, a));
      next[s] = best;
      residual = std::max(residual, std::abs(best - v.values[s]));
    }
    v.values.swap(next);
    v.residual = residual;
    v.residual_history.push_back(residual);
    ++v.sweeps;
    if (residual <= cfg.tolerance) break;
  }

  out.policy.action.assign(m.states, 0);
  for (std::size_t s = 0; s < m.states; ++s) {
    double best = action_value(m, v, s, 0);
    for (std::size_t a = 1; a < m.actions; ++a) {
      const double q = action_value(m, v, s, a);
      if (better(q, best)) {
        best = q;
        out.policy.action[s] = static_cast<int>(a);
      }
    }
  }
  return out;
}

double predict_reward_class(const TabularModel& m, std::size_t s, std::size_t a) {
  if (s >= m.states || a >= m.actions) return 0.0;
  if (!m.visited(s, a)) return 0.0;
  const auto& dist = m.reward[m.pair(s, a)];
  double best_p = -1.0;
  double best_v = 0.0;
  for (const auto& rm : dist) {
    const bool tie = std::abs(rm.prob - best_p) <= 1e-12;
    if (rm.prob > best_p + 1e-12 || (tie && rm.value == 0.0)) {
      best_p = rm.prob;
      best_v = rm.value;
    }
  }
  return best_v;
}

// --- trackers -----------------------------------------------------------------

MemoryTracker::MemoryTracker(const AugmentedStateIndex& idx, std::vector<MemoryUnit> units)
    : idx_(&idx), units_(std::move(units)), mem_(MemoryState::initial(units_.size())) {
  if (units_.size() != idx.memory_bits()) throw DimensionMismatch("unit count differs from index");
}

void MemoryTracker::reset() { mem_ = MemoryState::initial(units_.size()); }

std::optional<std::size_t> MemoryTracker::state(Observation obs) const {
  return idx_->encode(obs, mem_);
}

void MemoryTracker::advance(Observation obs, int) { mem_ = memory_step(mem_, obs, units_); }

int greedy_action(const PolicyTable& pt, const AugmentedStateIndex& idx, Observation obs,
                  const MemoryState& mem) {
  const auto s = idx.encode(obs, mem);
  if (!s || *s >= pt.action.size()) {
    note_unknown_state();
    return 0;
  }
  return pt.action[*s];
}

std::uint64_t unknown_state_count() { return g_unknown_states.load(); }

// --- history stacking -------------------------------------------------------

HistoryStateIndex::HistoryStateIndex(const AttributeSchema& observable_schema, GridSpec grid,
                                     std::size_t window)
    : window_(window), cells_(observable_schema, std::move(grid), 0) {}

std::optional<std::size_t> HistoryStateIndex::find(const Key& key) const {
  auto it = ids_.find(key);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t HistoryStateIndex::insert(const Key& key) {
  auto [it, fresh] = ids_.try_emplace(key, keys_.size());
  if (fresh) keys_.push_back(key);
  return it->second;
}

std::optional<HistoryStateIndex::Key> HistoryStateIndex::key(std::span<const std::int64_t> past_cells,
                                                             std::span<const int> past_actions,
                                                             Observation obs) const {
  const auto c = cells_.cell(obs);
  if (!c) return std::nullopt;
  Key k;
  k.reserve(1 + 2 * window_);
  k.push_back(static_cast<std::int64_t>(*c));
  for (std::size_t j = 0; j < window_; ++j) {
    const bool have = j < past_cells.size() && j < past_actions.size();
    k.push_back(have ? past_cells[j] : -1);
    k.push_back(have ? past_actions[j] : -1);
  }
  return k;
}

StackedModel history_stacking_model(const Dataset& d, std::size_t window, const GridSpec& grid) {
  if (d.episodes.empty() || d.horizon == 0) throw EmptyDataset("nothing to fit");
  StackedModel out{HistoryStateIndex(d.schema, grid, window), {}};
  auto& idx = out.index;

  std::vector<std::vector<std::size_t>> ids(d.episodes.size());
  for (std::size_t l = 0; l < d.episodes.size(); ++l) {
    const auto& ep = d.episodes[l];
    std::vector<std::int64_t> cells;  // most recent first
    std::vector<int> actions;
    for (std::size_t t = 0; t <= d.horizon; ++t) {
      const auto key = idx.key(cells, actions, ep[t].obs);
      if (!key) throw SchemaViolation("observation outside the planner grid");
      ids[l].push_back(idx.insert(*key));
      cells.insert(cells.begin(), (*key)[0]);
      actions.insert(actions.begin(), ep[t].action);
      if (cells.size() > window) {
        cells.pop_back();
        actions.pop_back();
      }
    }
  }
  ModelBuilder b(idx.size(), static_cast<std::size_t>(d.schema.action_count));
  for (std::size_t l = 0; l < d.episodes.size(); ++l)
    for (std::size_t t = 0; t < d.horizon; ++t)
      b.add(ids[l][t], static_cast<std::size_t>(d.episodes[l][t].action), ids[l][t + 1],
            d.episodes[l][t + 1].obs[d.schema.reward_attr][0]);
  out.model = b.build();
  return out;
}

HistoryTracker::HistoryTracker(const HistoryStateIndex& idx) : idx_(&idx) {}

void HistoryTracker::reset() {
  cells_.clear();
  actions_.clear();
}

std::optional<std::size_t> HistoryTracker::state(Observation obs) const {
  const std::vector<std::int64_t> cells(cells_.begin(), cells_.end());
  const std::vector<int> actions(actions_.begin(), actions_.end());
  const auto key = idx_->key(cells, actions, obs);
  if (!key) return std::nullopt;
  return idx_->find(*key);
}

void HistoryTracker::advance(Observation obs, int action) {
  const auto c = idx_->cells().cell(obs);
  cells_.push_front(c ? static_cast<std::int64_t>(*c) : -1);
  actions_.push_front(action);
  while (cells_.size() > idx_->window()) {
    cells_.pop_back();
    actions_.pop_back();
  }
}

}  // namespace cmrl
