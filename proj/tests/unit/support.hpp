#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cmrl/infotheory.hpp"
#include "cmrl/trajectory_store.hpp"

namespace cmrl::testing {

inline AttributeSpec grid_attr(const std::string& name, std::vector<double> lo, std::vector<double> hi) {
  AttributeSpec a;
  a.name = name;
  a.dim = lo.size();
  a.lower = std::move(lo);
  a.upper = std::move(hi);
  a.kind = AttributeKind::integer_grid;
  return a;
}

inline AttributeSpec real_attr(const std::string& name, std::vector<double> lo, std::vector<double> hi) {
  AttributeSpec a = grid_attr(name, std::move(lo), std::move(hi));
  a.kind = AttributeKind::continuous;
  return a;
}

inline Dataset make_dataset(AttributeSchema schema, std::vector<Episode> episodes) {
  Dataset d;
  d.schema = std::move(schema);
  d.horizon = episodes.empty() ? 0 : episodes.front().size() - 1;
  d.episodes = std::move(episodes);
  return d;
}

/// Scalar data: one attribute "x" over [lo, hi], one action, one episode per row.
inline Dataset scalar_dataset(const std::vector<std::vector<double>>& rows, double lo, double hi,
                              AttributeKind kind = AttributeKind::continuous) {
  AttributeSchema s;
  s.attributes.push_back(kind == AttributeKind::continuous ? real_attr("x", {lo}, {hi})
                                                           : grid_attr("x", {lo}, {hi}));
  std::vector<Episode> eps;
  for (const auto& row : rows) {
    Episode ep;
    for (double v : row) ep.push_back(Step{{{v}}, 0});
    eps.push_back(std::move(ep));
  }
  return make_dataset(std::move(s), std::move(eps));
}

/// 1-D latch world. Attribute 0 is the position on [0, 9] (a random walk,
/// action 0 = +1, action 1 = -1); attribute 1 is a flag that reads 1 from the
/// step after the position first equals `trigger`.
///
/// With `continuous` the walk takes N(±1, 0.3) steps and the position is a
/// continuous attribute, which keeps distance ties away.
inline Dataset latch_dataset(std::size_t episodes, std::size_t horizon, std::uint64_t seed,
                             double trigger = 5.0, bool continuous = false) {
  AttributeSchema s;
  s.attributes.push_back(continuous ? real_attr("pos", {0.0}, {9.0}) : grid_attr("pos", {0.0}, {9.0}));
  s.attributes.push_back(grid_attr("flag", {0.0}, {1.0}));
  s.action_count = 2;
  s.reward_attr = 1;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> start(0, 9), act(0, 1);
  std::normal_distribution<double> jitter(0.0, 0.3);
  std::vector<Episode> eps;
  for (std::size_t l = 0; l < episodes; ++l) {
    Episode ep;
    double pos = start(rng);
    bool seen = false;
    for (std::size_t t = 0; t <= horizon; ++t) {
      const int a = act(rng);
      ep.push_back(Step{{{pos}, {seen ? 1.0 : 0.0}}, a});
      if (continuous ? std::abs(pos - trigger) <= 0.5 : pos == trigger) seen = true;
      double next = pos + (a == 0 ? 1.0 : -1.0) + (continuous ? jitter(rng) : 0.0);
      pos = next < 0.0 ? 0.0 : (next > 9.0 ? 9.0 : next);
    }
    eps.push_back(std::move(ep));
  }
  return make_dataset(std::move(s), std::move(eps));
}

// Central differences of the reference route, step 1e-5.
inline EntropyGradient finite_difference(const Dataset& d, const Variable& target, const std::vector<Variable>& parents,
                                         const BallEvent& b, const SoftEventConfig& cfg, const GridSpec& g) {
  const double h = 1e-5;
  auto f = [&](const BallEvent& x) { return relaxed_conditional_entropy(d, target, parents, x, cfg, g); };
  EntropyGradient fd;
  fd.value = f(b);
  for (std::size_t j = 0; j < b.center.size(); ++j) {
    BallEvent p = b, m = b;
    p.center[j] += h;
    m.center[j] -= h;
    fd.center.push_back((f(p) - f(m)) / (2 * h));
  }
  BallEvent p = b, m = b;
  p.radius += h;
  m.radius -= h;
  fd.radius = (f(p) - f(m)) / (2 * h);
  return fd;
}

// True when the stencil of finite_difference crosses a point where the
// objective is not differentiable: a change of the running-minimum argmin, or
// the kink of the norm at a data point, or the kink of the exponential form
// at d = r.
inline bool near_boundary(const Dataset& d, const BallEvent& b, const SoftEventConfig& cfg, double h = 1e-5) {
  auto dist = [&](std::span<const double> x, const std::vector<double>& c) {
    double sq = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) sq += (x[j] - c[j]) * (x[j] - c[j]);
    return std::sqrt(sq);
  };
  std::vector<std::vector<double>> centers{b.center};
  for (std::size_t j = 0; j < b.center.size(); ++j)
    for (double s : {-h, h}) {
      centers.push_back(b.center);
      centers.back()[j] += s;
    }
  for (std::size_t l = 0; l < d.episodes.size(); ++l) {
    std::vector<std::size_t> arg(centers.size(), 0);
    std::vector<double> best(centers.size(), INFINITY);
    for (std::size_t t = 0; t < d.horizon; ++t) {
      const auto x = d.obs(l, t, b.attr);
      for (std::size_t k = 0; k < centers.size(); ++k) {
        const double v = dist(x, centers[k]);
        if (v < best[k]) {
          best[k] = v;
          arg[k] = t;
        }
      }
      for (std::size_t k = 1; k < centers.size(); ++k)
        if (d.obs(l, arg[k], b.attr)[0] != d.obs(l, arg[0], b.attr)[0]) return true;
      if (dist(x, b.center) <= 2 * h) return true;
      if (cfg.form == RelaxationForm::exponential && std::abs(best[0] - b.radius) <= 2 * h) return true;
    }
  }
  return false;
}

inline double relative_error(const EntropyGradient& g, const EntropyGradient& fd) {
  double num = std::abs(g.radius - fd.radius), den = std::abs(fd.radius);
  for (std::size_t j = 0; j < g.center.size(); ++j) {
    num = std::max(num, std::abs(g.center[j] - fd.center[j]));
    den = std::max(den, std::abs(fd.center[j]));
  }
  return num / den;
}

}  // namespace cmrl::testing
