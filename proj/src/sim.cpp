#include "cmrl/sim.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "cmrl/error.hpp"

namespace cmrl {

namespace {

constexpr std::array<std::array<int, 3>, kMoveActions> kMoves{
    {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

bool in_grid(const Cell& c, const std::array<int, 3>& grid) {
  for (std::size_t j = 0; j < 3; ++j)
    if (c[j] < 0 || c[j] >= grid[j]) return false;
  return true;
}

void check_grid(const std::array<int, 3>& grid) {
  for (int e : grid)
    if (e < 1) throw ConfigError("grid extents must be positive");
  if (grid[0] * grid[1] * grid[2] < 2) throw ConfigError("grid needs at least two cells");
}

Cell random_cell(const std::array<int, 3>& grid, std::mt19937_64& rng) {
  Cell c{};
  for (std::size_t j = 0; j < 3; ++j) c[j] = std::uniform_int_distribution<int>(0, grid[j] - 1)(rng);
  return c;
}

int manhattan(const Cell& a, const Cell& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

}  // namespace

void validate_config(const PaintingConfig& cfg) {
  check_grid(cfg.grid);
  if (!in_grid(cfg.bucket, cfg.grid) || !in_grid(cfg.canvas, cfg.grid))
    throw ConfigError("bucket and canvas must lie inside the grid");
  if (cfg.bucket == cfg.canvas) throw ConfigError("bucket and canvas must differ");
  if (cfg.horizon < 1) throw ConfigError("horizon must be at least 1");
}

void validate_config(const TireConfig& cfg) {
  check_grid(cfg.grid);
  std::set<Cell> cells(cfg.lugs.begin(), cfg.lugs.end());
  cells.insert(cfg.center);
  if (cells.size() != 5) throw ConfigError("lug cells and centre must be 5 distinct cells");
  for (const auto& c : cells)
    if (!in_grid(c, cfg.grid)) throw ConfigError("lug and centre cells must lie inside the grid");
  if (cfg.horizon < 1) throw ConfigError("horizon must be at least 1");
}

LatchEnv::LatchEnv(const PaintingConfig& cfg)
    : grid_(cfg.grid), triggers_{cfg.bucket}, goal_(cfg.canvas), horizon_(cfg.horizon),
      terminal_(false), painting_(true) {
  validate_config(cfg);
  build_schema();
}

LatchEnv::LatchEnv(const TireConfig& cfg)
    : grid_(cfg.grid), triggers_(cfg.lugs.begin(), cfg.lugs.end()), goal_(cfg.center),
      horizon_(cfg.horizon), terminal_(cfg.terminal_on_success), painting_(false) {
  validate_config(cfg);
  build_schema();
}

void LatchEnv::build_schema() {
  AttributeSpec pos{"position", 0, {}, {}, AttributeKind::integer_grid};
  for (std::size_t j = 0; j < 3; ++j) {
    if (grid_[j] < 2) continue;
    axes_.push_back(j);
    pos.lower.push_back(0.0);
    pos.upper.push_back(static_cast<double>(grid_[j] - 1));
  }
  pos.dim = axes_.size();
  schema_.attributes = {pos, AttributeSpec{"reward", 1, {0.0}, {1.0}, AttributeKind::integer_grid}};
  schema_.action_count = kMoveActions;
  schema_.reward_attr = 1;
}

std::size_t LatchEnv::cell_count() const {
  return static_cast<std::size_t>(grid_[0]) * static_cast<std::size_t>(grid_[1]) *
         static_cast<std::size_t>(grid_[2]);
}

std::vector<double> LatchEnv::position_of(const Cell& c) const {
  std::vector<double> p;
  for (std::size_t j : axes_) p.push_back(static_cast<double>(c[j]));
  return p;
}

EnvState LatchEnv::reset(std::mt19937_64& rng) const {
  EnvState s;
  s.pos = random_cell(grid_, rng);
  s.latches.assign(triggers_.size(), 0);
  for (std::size_t k = 0; k < triggers_.size(); ++k)
    if (s.pos == triggers_[k]) s.latches[k] = 1;
  return s;
}

std::vector<std::vector<double>> LatchEnv::observe(const EnvState& s, double reward) const {
  return {position_of(s.pos), {reward}};
}

StepResult LatchEnv::step(const EnvState& s, int action) const {
  if (s.done) throw SteppedAfterDone("episode already finished");
  if (action < 0 || action >= kMoveActions) throw IndexError("action " + std::to_string(action));
  StepResult r{s, {}, 0.0};
  EnvState& n = r.state;
  for (std::size_t j = 0; j < 3; ++j)
    n.pos[j] = std::clamp(s.pos[j] + kMoves[static_cast<std::size_t>(action)][j], 0, grid_[j] - 1);
  ++n.t;
  // The reward condition uses latches as they stood before this move; the
  // goal is never a trigger cell, so the order is immaterial.
  const bool armed = std::all_of(s.latches.begin(), s.latches.end(), [](int b) { return b != 0; });
  if (n.pos == goal_ && armed) {
    r.reward = 1.0;
    if (!painting_ && terminal_) n.done = true;
  }
  for (std::size_t k = 0; k < triggers_.size(); ++k)
    if (n.pos == triggers_[k]) n.latches[k] = 1;
  if (n.t >= horizon_) n.done = true;
  r.obs = observe(n, r.reward);
  return r;
}

std::vector<MemoryUnit> LatchEnv::ground_truth_units() const {
  std::vector<MemoryUnit> units;
  for (std::size_t k = 0; k < triggers_.size(); ++k)
    units.push_back({k, BallEvent{0, position_of(triggers_[k]), 0.5}});
  return units;
}

int min_painting_separation(const std::array<int, 3>& grid) {
  return std::max(1, (grid[0] + grid[1] + grid[2] - 3 + 1) / 2);
}

PaintingConfig painting_placement(int placement, std::uint64_t seed, PaintingConfig base) {
  base.seed = seed;
  if (placement == 0) return base;
  auto rng = stream(seed, static_cast<std::uint64_t>(placement), 0x9a1);
  base.bucket = random_cell(base.grid, rng);
  const int sep = min_painting_separation(base.grid);
  do {
    base.canvas = random_cell(base.grid, rng);
  } while (manhattan(base.canvas, base.bucket) < sep);
  return base;
}

TireConfig tire_placement(int placement, std::uint64_t seed, TireConfig base) {
  base.seed = seed;
  if (placement == 0) return base;
  auto rng = stream(seed, static_cast<std::uint64_t>(placement), 0x71e);
  // Lugs sit on the diagonal neighbours of a random wheel centre.
  if (base.grid[0] < 3 || base.grid[1] < 3) throw ConfigError("tire grid needs x and y extents >= 3");
  base.center = {std::uniform_int_distribution<int>(1, base.grid[0] - 2)(rng),
                 std::uniform_int_distribution<int>(1, base.grid[1] - 2)(rng),
                 std::uniform_int_distribution<int>(0, base.grid[2] - 1)(rng)};
  const auto& c = base.center;
  base.lugs = {{{c[0] - 1, c[1] - 1, c[2]}, {c[0] - 1, c[1] + 1, c[2]},
                {c[0] + 1, c[1] - 1, c[2]}, {c[0] + 1, c[1] + 1, c[2]}}};
  return base;
}

TracedDataset collect_random_traced(const LatchEnv& env, std::size_t episodes, std::uint64_t seed) {
  if (episodes < 1) throw ConfigError("need at least one episode");
  LatchEnv open = env;
  open.set_terminal_on_success(false);
  TracedDataset out;
  out.data.schema = env.schema();
  out.data.horizon = env.horizon();
  std::uniform_int_distribution<int> pick(0, kMoveActions - 1);
  for (std::size_t l = 0; l < episodes; ++l) {
    auto rng = stream(seed, l, 0xc011);
    EnvState s = open.reset(rng);
    Episode ep;
    std::vector<std::vector<int>> latches;
    std::vector<std::vector<double>> obs = open.observe(s, 0.0);
    for (std::size_t t = 0; t <= env.horizon(); ++t) {
      const int a = pick(rng);
      ep.push_back({obs, a});
      latches.push_back(s.latches);
      if (t == env.horizon()) break;
      StepResult r = open.step(s, a);
      s = std::move(r.state);
      obs = std::move(r.obs);
    }
    out.data.episodes.push_back(std::move(ep));
    out.latches.push_back(std::move(latches));
  }
  return out;
}

Dataset collect_random(const LatchEnv& env, std::size_t episodes, std::uint64_t seed) {
  return collect_random_traced(env, episodes, seed).data;
}

PolicyAgent::PolicyAgent(const PolicyTable& policy, StateTracker& tracker)
    : policy_(&policy), tracker_(&tracker) {}

void PolicyAgent::reset() { tracker_->reset(); }

int PolicyAgent::act(Observation obs) {
  const auto s = tracker_->state(obs);
  int a = 0;
  if (s && *s < policy_->action.size()) a = policy_->action[*s];
  tracker_->advance(obs, a);
  return a;
}

int RandomAgent::act(Observation) {
  return std::uniform_int_distribution<int>(0, kMoveActions - 1)(rng_);
}

EpisodeResult run_episode(const LatchEnv& env, Agent& agent, std::mt19937_64& rng) {
  EpisodeResult res;
  agent.reset();
  EnvState s = env.reset(rng);
  auto obs = env.observe(s, 0.0);
  while (!s.done) {
    const int a = agent.act(obs);
    StepResult r = env.step(s, a);
    res.total_reward += r.reward;
    ++res.steps;
    if (r.reward > 0.0) res.success = true;
    s = std::move(r.state);
    obs = std::move(r.obs);
  }
  return res;
}

EvaluationSummary evaluate_policy(const LatchEnv& env, Agent& agent, std::size_t episodes,
                                  std::uint64_t seed) {
  if (episodes == 0) throw ConfigError("need at least one evaluation episode");
  EvaluationSummary sum;
  sum.episodes = episodes;
  std::size_t successes = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    auto rng = stream(seed, e, 0xe7a1);
    const EpisodeResult r = run_episode(env, agent, rng);
    sum.mean_reward += r.total_reward;
    successes += r.success ? 1 : 0;
  }
  sum.mean_reward /= static_cast<double>(episodes);
  sum.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
  return sum;
}

double RewardMetrics::recall(int c) const {
  const auto& v = classes.at(static_cast<std::size_t>(c)).recall;
  if (!v) throw ClassAbsent("reward class " + std::to_string(c) + " never occurs");
  return *v;
}

double RewardMetrics::precision(int c) const {
  const auto& v = classes.at(static_cast<std::size_t>(c)).precision;
  if (!v) throw ClassAbsent("reward class " + std::to_string(c) + " is never predicted");
  return *v;
}

RewardMetrics reward_metrics(const TabularModel& m, StateTracker& tracker, const Dataset& test) {
  if (test.episodes.empty() || test.horizon == 0) throw EmptyDataset("empty test dataset");
  const std::size_t ra = test.schema.reward_attr;
  RewardMetrics out;
  for (const auto& ep : test.episodes) {
    tracker.reset();
    for (std::size_t t = 0; t < test.horizon; ++t) {
      const auto s = tracker.state(ep[t].obs);
      const int a = ep[t].action;
      const int predicted =
          s ? static_cast<int>(predict_reward_class(m, *s, static_cast<std::size_t>(a)) > 0.5) : 0;
      const int actual = ep[t + 1].obs[ra][0] > 0.5 ? 1 : 0;
      for (int c = 0; c < 2; ++c) {
        auto& cm = out.classes[static_cast<std::size_t>(c)];
        if (predicted == c && actual == c) ++cm.tp;
        if (predicted == c && actual != c) ++cm.fp;
        if (predicted != c && actual == c) ++cm.fn;
      }
      tracker.advance(ep[t].obs, a);
    }
  }
  for (auto& cm : out.classes) {
    if (cm.tp + cm.fn > 0) cm.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    if (cm.tp + cm.fp > 0)
      cm.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  }
  return out;
}

}  // namespace cmrl
