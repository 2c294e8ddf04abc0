#include "cmrl/discovery.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "cmrl/error.hpp"

namespace cmrl {

namespace {

std::mt19937_64 derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(c)};
  return std::mt19937_64(seq);
}

double hard_conditional_entropy(const Dataset& d, std::size_t target, std::span<const Variable> parents,
                                const GridSpec& g) {
  std::vector<Variable> vars{Variable::attribute(target, 1, VarRole::target)};
  vars.insert(vars.end(), parents.begin(), parents.end());
  return conditional_entropy(empirical_pmf(d, vars, g));
}

GridSpec grid_for(const Dataset& d, const DiscoveryConfig& cfg) {
  GridSpec g = cfg.grid.value_or(GridSpec::defaults(d.schema));
  // Memory columns appended by augment_dataset get unit bins.
  const GridSpec extra = GridSpec::defaults(d.schema);
  for (std::size_t i = g.edges.size(); i < d.schema.size(); ++i) g.edges.push_back(extra.edges[i]);
  return g;
}

// Removes the listed units and renumbers the rest densely.
void compact(DiscoveryResult& out, const std::vector<std::size_t>& dropped) {
  CausalGraph& graph = out.graph;
  std::vector<std::optional<std::size_t>> remap(graph.units.size());
  std::vector<MemoryUnit> units;
  std::vector<UnitRecord> records;
  for (std::size_t k = 0; k < graph.units.size(); ++k) {
    if (std::find(dropped.begin(), dropped.end(), k) != dropped.end()) {
      out.report.pruned.push_back(out.report.units[k]);
      continue;
    }
    remap[k] = units.size();
    units.push_back({units.size(), graph.units[k].event});
    records.push_back(out.report.units[k]);
  }
  std::map<Node, std::vector<Node>> parents;
  for (const auto& [child, pa] : graph.parents) {
    Node c = child;
    if (c.kind == NodeKind::memory) {
      if (!remap[c.index]) continue;
      c.index = *remap[c.index];
    }
    std::vector<Node> kept;
    for (Node p : pa) {
      if (p.kind == NodeKind::memory) {
        if (!remap[p.index]) continue;
        p.index = *remap[p.index];
      }
      kept.push_back(p);
    }
    parents[c] = std::move(kept);
  }
  graph.parents = std::move(parents);
  graph.units = std::move(units);
  out.report.units = std::move(records);
}

}  // namespace

void validate_discovery_config(const DiscoveryConfig& cfg, std::size_t attributes) {
  if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (cfg.effective_max_var(attributes) < attributes + 1)
    throw ConfigError("max_var must be at least n + 1");
  if (cfg.restarts < 1) throw ConfigError("restarts must be at least 1");
  if (!(cfg.step_center > 0.0) || !(cfg.step_radius > 0.0))
    throw ConfigError("step sizes must be positive");
  if (!(cfg.eps_grad_center >= 0.0) || !(cfg.eps_grad_radius >= 0.0))
    throw ConfigError("gradient tolerances must be non-negative");
  if (cfg.max_grad_iters < 1) throw ConfigError("max_grad_iters must be at least 1");
  if (!(cfg.r_min > 0.0)) throw ConfigError("r_min must be positive");
  if (!(cfg.min_gain >= 0.0)) throw ConfigError("min_gain must be non-negative");
  validate_kernel(cfg.kernel);
  validate_soft(cfg.soft);
}

CausalGraph CausalGraph::initial(std::size_t attributes) {
  CausalGraph g;
  std::vector<Node> base;
  for (std::size_t i = 0; i < attributes; ++i) base.push_back({NodeKind::attribute, i});
  base.push_back({NodeKind::action, 0});
  for (std::size_t i = 0; i < attributes; ++i) g.parents[{NodeKind::attribute, i}] = base;
  return g;
}

std::vector<Variable> parent_columns(std::span<const Node> parents, std::size_t attributes) {
  std::vector<Variable> vars;
  for (const auto& p : parents) {
    switch (p.kind) {
      case NodeKind::attribute:
        vars.push_back(Variable::attribute(p.index, 0));
        break;
      case NodeKind::action:
        vars.push_back(Variable::action(0));
        break;
      case NodeKind::memory:
        vars.push_back(Variable::attribute(attributes + p.index, 0));
        break;
    }
  }
  return vars;
}

std::vector<StochasticVariable> transition_entropies(const Dataset& d, const GridSpec& g) {
  const std::size_t n = d.schema.size();
  const auto graph = CausalGraph::initial(n);
  std::vector<StochasticVariable> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pa = parent_columns(graph.parents.at({NodeKind::attribute, i}), n);
    out.push_back({i, hard_conditional_entropy(d, i, pa, g)});
  }
  return out;
}

std::vector<StochasticVariable> identify_stochastic(const Dataset& d, const DiscoveryConfig& cfg) {
  validate_dataset(d);
  validate_discovery_config(cfg, d.schema.size());
  const GridSpec g = grid_for(d, cfg);
  validate_grid(g, d.schema);
  auto all = transition_entropies(d, g);
  std::vector<StochasticVariable> open;
  for (const auto& v : all)
    if (v.entropy > cfg.epsilon) open.push_back(v);
  std::stable_sort(open.begin(), open.end(),
                   [](const auto& a, const auto& b) { return a.entropy > b.entropy; });
  return open;
}

BallSearch optimize_ball(const Dataset& d, std::size_t target, std::span<const Variable> parents,
                         std::size_t attr, const DiscoveryConfig& cfg, std::mt19937_64& rng) {
  if (attr >= d.schema.size()) throw IndexError("attribute index " + std::to_string(attr));
  if (parents.empty()) throw ConfigError("parent list must not be empty");
  const GridSpec g = grid_for(d, cfg);
  const auto& spec = d.schema.attributes[attr];
  const double r_max = spec.domain_radius();
  const double r_lo = std::min(cfg.r_min, r_max);

  const RelaxedObjective objective(d, Variable::attribute(target, 1, VarRole::target), parents, attr,
                                   cfg.soft, g);
  const double base = objective.base_entropy();
  // Steps are taken on the entropy relative to H(X | pa), so the step sizes
  // are in domain units independent of how small the entropy is.
  const double scale = base > 0.0 ? 1.0 / base : 1.0;

  auto clamp_ball = [&](BallEvent& b) {
    for (std::size_t j = 0; j < spec.dim; ++j)
      b.center[j] = std::clamp(b.center[j], spec.lower[j], spec.upper[j]);
    b.radius = std::clamp(b.radius, r_lo, r_max);
  };

  std::optional<BallSearch> best;
  for (std::size_t k = 0; k < cfg.restarts; ++k) {
    BallEvent ball{attr, sample_center(d, attr, cfg.kernel, rng),
                   std::uniform_real_distribution<double>(0.0, r_max)(rng)};
    clamp_ball(ball);
    // Each restart keeps its iterate with the lowest hard entropy.
    std::optional<BallSearch> local;
    auto consider = [&](std::size_t it) {
      const double h = objective.hard_entropy(ball);
      if (!std::isfinite(h)) return;
      const double gain = information_gain(base, h);
      if (!local || gain > local->gain) local = BallSearch{ball, gain, it, k};
    };
    consider(0);
    std::size_t it = 0;
    while (it < cfg.max_grad_iters) {
      ++it;
      EntropyGradient grad = objective.gradient(ball);
      for (auto& x : grad.center) x *= scale;
      grad.radius *= scale;
      if (!std::isfinite(grad.value)) break;
      for (std::size_t j = 0; j < spec.dim; ++j) ball.center[j] -= cfg.step_center * grad.center[j];
      ball.radius -= cfg.step_radius * grad.radius;
      const double moved_r = ball.radius;
      const auto moved_c = ball.center;
      clamp_ball(ball);
      consider(it);
      // Stop on a small projected gradient.
      double pc = 0.0;
      for (std::size_t j = 0; j < spec.dim; ++j) {
        const double delta = grad.center[j] + (moved_c[j] - ball.center[j]) / cfg.step_center;
        pc += delta * delta;
      }
      const double pr = grad.radius + (moved_r - ball.radius) / cfg.step_radius;
      if (std::sqrt(pc) < cfg.eps_grad_center && std::abs(pr) < cfg.eps_grad_radius) break;
    }
    if (local && (!best || local->gain > best->gain)) best = local;
  }
  if (!best) throw NoFiniteGain("no restart produced a finite entropy");
  return *best;
}

DiscoveryResult discover(const Dataset& d, const DiscoveryConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  validate_dataset(d);
  const std::size_t n = d.schema.size();
  validate_discovery_config(cfg, n);
  const std::size_t max_var = cfg.effective_max_var(n);

  DiscoveryResult out;
  out.graph = CausalGraph::initial(n);
  out.report.config = cfg;
  CausalGraph& graph = out.graph;

  const auto open = identify_stochastic(d, cfg);
  for (const auto& v : transition_entropies(d, grid_for(d, cfg)))
    out.report.entropies[v.attr] = {v.entropy, v.entropy};
  Dataset augmented = d;
  std::vector<std::size_t> dropped;

  for (std::size_t order = 0; order < open.size(); ++order) {
    const std::size_t x = open[order].attr;
    auto& pa = graph.parents.at({NodeKind::attribute, x});
    const GridSpec g = grid_for(augmented, cfg);
    double h = hard_conditional_entropy(augmented, x, parent_columns(pa, n), g);
    EntropyRecord record{h, h};

    std::size_t iteration = 0;
    while (h >= cfg.epsilon && pa.size() < max_var) {
      const auto columns = parent_columns(pa, n);
      std::optional<BallSearch> best;
      for (std::size_t i = 0; i < n; ++i) {
        auto rng = derive(cfg.seed, x, iteration, i);
        BallSearch found = optimize_ball(augmented, x, columns, i, cfg, rng);
        if (!best || found.gain > best->gain) best = found;
      }
      ++iteration;
      if (!best || !(best->gain > cfg.min_gain)) break;

      const std::size_t k = graph.units.size();
      graph.units.push_back({k, best->ball});
      graph.parents[{NodeKind::memory, k}] = {{NodeKind::memory, k},
                                              {NodeKind::attribute, best->ball.attr}};
      pa.push_back({NodeKind::memory, k});
      augmented = augment_dataset(d, graph.units);
      const GridSpec ga = grid_for(augmented, cfg);
      const double next = hard_conditional_entropy(augmented, x, parent_columns(pa, n), ga);
      out.report.units.push_back(
          {best->ball.attr, best->ball.center, best->ball.radius, h - next, best->iterations, x});
      h = next;
    }
    // Backward pass: a unit whose removal costs at most min_gain is dropped.
    while (cfg.prune) {
      std::optional<std::size_t> drop;
      double drop_h = 0.0;
      for (std::size_t j = 0; j < pa.size(); ++j) {
        if (pa[j].kind != NodeKind::memory) continue;
        auto fewer = pa;
        fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(j));
        const double hj = hard_conditional_entropy(augmented, x, parent_columns(fewer, n),
                                                   grid_for(augmented, cfg));
        if (hj - h <= cfg.min_gain && (!drop || hj < drop_h)) {
          drop = j;
          drop_h = hj;
        }
      }
      if (!drop) break;
      dropped.push_back(pa[*drop].index);
      pa.erase(pa.begin() + static_cast<std::ptrdiff_t>(*drop));
      h = drop_h;
    }
    record.final = h;
    out.report.entropies[x] = record;
  }
  if (!dropped.empty()) compact(out, dropped);
  out.report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace cmrl
