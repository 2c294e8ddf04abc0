#include "cmrl/infotheory.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "cmrl/error.hpp"

namespace cmrl {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

double plogp_ratio(double joint, double cond) {
  // 0 log 0 := 0
  if (joint <= 0.0) return 0.0;
  return joint * std::log2(joint / cond);
}

}  // namespace

bool BallEvent::contains(std::span<const double> point) const {
  if (point.size() != center.size()) throw DimensionMismatch("point and ball dimensions differ");
  return distance(point, center) <= radius;
}

void validate_ball(const BallEvent& b, const AttributeSchema& schema) {
  if (b.attr >= schema.size()) throw IndexError("ball attribute " + std::to_string(b.attr));
  const auto& a = schema.attributes[b.attr];
  if (b.center.size() != a.dim) throw DimensionMismatch("ball center dimension");
  for (std::size_t j = 0; j < a.dim; ++j)
    if (!(b.center[j] >= a.lower[j] && b.center[j] <= a.upper[j]))
      throw SchemaViolation("ball center outside the domain of " + a.name);
  if (!(b.radius >= 0.0) || b.radius > a.domain_radius() * (1.0 + 1e-12))
    throw SchemaViolation("ball radius outside [0, domain radius]");
}

void validate_soft(const SoftEventConfig& cfg) {
  if (!(cfg.w_e > 0.0)) throw ConfigError("relaxation sharpness w_e must be positive");
}

Relaxed relax(double dist, double radius, const SoftEventConfig& cfg) {
  if (!std::isfinite(dist)) return {0.0, 0.0};
  const double z = cfg.w_e * (dist - radius);
  if (cfg.form == RelaxationForm::logistic) {
    const double phi = 1.0 / (1.0 + std::exp(z));
    return {phi, -cfg.w_e * phi * (1.0 - phi)};
  }
  if (z <= 0.0) return {1.0, 0.0};
  const double phi = std::exp(-z);
  return {phi, -cfg.w_e * phi};
}

double conditional_entropy(const Pmf& p) {
  std::size_t target = p.vars().size();
  for (std::size_t v = 0; v < p.vars().size(); ++v) {
    if (p.vars()[v].role != VarRole::target) continue;
    if (target != p.vars().size()) throw MalformedPmf("more than one target variable");
    target = v;
  }
  if (target == p.vars().size()) throw MalformedPmf("no target variable");
  const double total = p.total();
  if (std::abs(total - 1.0) > 1e-9) throw MalformedPmf("masses sum to " + std::to_string(total));

  std::vector<std::size_t> cond;
  for (std::size_t v = 0; v < p.vars().size(); ++v)
    if (v != target) cond.push_back(v);
  const Pmf py = p.marginal(cond);

  double h = 0.0;
  for (const auto& [k, m] : p.table()) {
    const auto a = p.decode(k);
    std::vector<std::size_t> ya;
    for (std::size_t v : cond) ya.push_back(a[v]);
    h -= plogp_ratio(m, py.mass(ya));
  }
  return std::max(0.0, h);
}

std::vector<double> soft_event_weights(const Dataset& d, const BallEvent& b,
                                       const SoftEventConfig& cfg) {
  validate_soft(cfg);
  if (b.attr >= d.schema.size()) throw IndexError("ball attribute " + std::to_string(b.attr));
  std::vector<double> m(d.episodes.size() * d.horizon, 0.0);
  for (std::size_t l = 0; l < d.episodes.size(); ++l) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < d.horizon; ++t) {
      if (t > 0) best = std::min(best, distance(d.obs(l, t - 1, b.attr), b.center));
      m[l * d.horizon + t] = relax(best, b.radius, cfg).value;
    }
  }
  return m;
}

std::vector<double> hard_event_weights(const Dataset& d, const BallEvent& b) {
  if (b.attr >= d.schema.size()) throw IndexError("ball attribute " + std::to_string(b.attr));
  std::vector<double> m(d.episodes.size() * d.horizon, 0.0);
  for (std::size_t l = 0; l < d.episodes.size(); ++l) {
    bool seen = false;
    for (std::size_t t = 0; t < d.horizon; ++t) {
      if (t > 0 && !seen) seen = b.contains(d.obs(l, t - 1, b.attr));
      m[l * d.horizon + t] = seen ? 1.0 : 0.0;
    }
  }
  return m;
}

double relaxed_conditional_entropy(const Dataset& d, const Variable& target,
                                   std::span<const Variable> parents, const BallEvent& b,
                                   const SoftEventConfig& cfg, const GridSpec& g,
                                   std::span<const double> sample_weights) {
  std::vector<Variable> vars;
  Variable x = target;
  x.role = VarRole::target;
  vars.push_back(x);
  for (auto p : parents) {
    if (p.kind == VarKind::event) throw DimensionMismatch("parents must not contain the event");
    p.role = VarRole::parent;
    vars.push_back(p);
  }
  vars.push_back(Variable::event());
  const auto m = soft_event_weights(d, b, cfg);
  return conditional_entropy(empirical_pmf(d, vars, g, sample_weights, m));
}

// ---------------------------------------------------------------------------


RelaxedObjective::RelaxedObjective(const Dataset& d, const Variable& target,
                                   std::span<const Variable> parents, std::size_t attr,
                                   const SoftEventConfig& cfg, const GridSpec& g,
                                   std::span<const double> sample_weights)
    : attr_(attr), cfg_(cfg) {
  validate_soft(cfg);
  if (attr >= d.schema.size()) throw IndexError("attribute index " + std::to_string(attr));
  if (d.episodes.empty() || d.horizon == 0) throw EmptyDataset("no samples");
  dim_ = d.schema.attributes[attr].dim;
  std::vector<Variable> all{target};
  all.insert(all.end(), parents.begin(), parents.end());
  const std::size_t steps = samples_per_episode(d, all);
  for (const auto& p : parents)
    if (p.kind == VarKind::event) throw DimensionMismatch("parents must not contain the event");

  const std::size_t L = d.episodes.size();
  const std::size_t n = L * steps;
  if (!sample_weights.empty() && sample_weights.size() != n)
    throw DimensionMismatch("sample weights need one entry per (l, t) sample");

  auto bin_of = [&](const Variable& v, std::size_t l, std::size_t t) -> std::size_t {
    const std::size_t step = t + static_cast<std::size_t>(v.offset);
    if (v.kind == VarKind::action) return static_cast<std::size_t>(d.action(l, step));
    if (v.index >= d.schema.size()) throw IndexError("attribute index " + std::to_string(v.index));
    return g.bin(v.index, d.obs(l, step, v.index));
  };
  auto card_of = [&](const Variable& v) -> std::size_t {
    return v.kind == VarKind::action ? static_cast<std::size_t>(d.schema.action_count)
                                     : g.bin_count(v.index);
  };

  // Pass 1: per parent configuration, which target bins occur.
  std::vector<std::uint64_t> xk(n), yk(n);
  std::vector<double> w(n);
  std::map<std::uint64_t, std::map<std::uint64_t, double>> counts;
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t s = l * steps + t;
      xk[s] = bin_of(target, l, t);
      std::uint64_t key = 0;
      for (const auto& p : parents) key = key * card_of(p) + bin_of(p, l, t);
      yk[s] = key;
      w[s] = sample_weights.empty() ? 1.0 : sample_weights[s];
      if (!(w[s] >= 0.0) || !std::isfinite(w[s]))
        throw DimensionMismatch("sample weight must be >= 0");
      total_ += w[s];
      if (w[s] > 0.0) counts[key][xk[s]] += w[s];
    }
  }
  if (total_ <= 0.0) throw AllZeroWeights("every sample has zero weight");

  std::map<std::uint64_t, std::size_t> yid, xid;
  for (const auto& [key, xs] : counts) {
    if (xs.size() < 2) continue;
    yid.emplace(key, yid.size());
    double wy = 0.0;
    for (const auto& [xv, c] : xs) {
      xid.try_emplace(xv, xid.size());
      wy += c;
    }
    for (const auto& [xv, c] : xs) base_ -= plogp_ratio(c / total_, wy / total_);
  }
  base_ = std::max(0.0, base_);
  ny_ = yid.size();
  nx_ = std::max<std::size_t>(xid.size(), 1);

  // Pass 2: relevant samples and each episode's distinct points by first visit.
  for (std::size_t l = 0; l < L; ++l) {
    EpisodeSpan span{x_.size(), x_.size(), first_visit_.size(), first_visit_.size()};
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t s = l * steps + t;
      if (w[s] == 0.0) continue;
      auto it = yid.find(yk[s]);
      if (it == yid.end()) continue;
      y_.push_back(it->second);
      x_.push_back(xid.at(xk[s]));
      w_.push_back(w[s]);
      t_.push_back(t);
    }
    span.last_sample = x_.size();
    if (span.last_sample == span.first_sample) continue;
    const std::size_t horizon_needed = t_.back();  // points strictly before the last sample
    for (std::size_t t = 0; t < horizon_needed; ++t) {
      const auto o = d.obs(l, t, attr);
      bool seen = false;
      for (std::size_t q = span.first_point; q < first_visit_.size() && !seen; ++q)
        seen = std::equal(o.begin(), o.end(), points_.begin() + static_cast<std::ptrdiff_t>(q * dim_));
      if (seen) continue;
      points_.insert(points_.end(), o.begin(), o.end());
      first_visit_.push_back(t);
    }
    span.last_point = first_visit_.size();
    spans_.push_back(span);
  }
}

void RelaxedObjective::accumulate(const BallEvent& b, bool hard, Accum& acc) const {
  if (b.center.size() != dim_) throw DimensionMismatch("ball center dimension");
  const std::size_t n = x_.size();
  acc.m.resize(n);
  acc.dm_dd.resize(n);
  acc.arg.resize(n);
  acc.dist.resize(n);
  acc.wxye.assign(ny_ * nx_ * 2, 0.0);
  acc.wye.assign(ny_ * 2, 0.0);
  const double* c = b.center.data();

  for (const auto& span : spans_) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_at = 0;
    std::size_t q = span.first_point;
    for (std::size_t s = span.first_sample; s < span.last_sample; ++s) {
      for (; q < span.last_point && first_visit_[q] < t_[s]; ++q) {
        const double* o = points_.data() + q * dim_;
        double sq = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) sq += (o[j] - c[j]) * (o[j] - c[j]);
        const double dd = std::sqrt(sq);
        if (dd < best) {
          best = dd;
          best_at = q;
        }
      }
      double m = 0.0;
      double dm = 0.0;
      if (hard) {
        m = best <= b.radius ? 1.0 : 0.0;
      } else {
        const Relaxed r = relax(best, b.radius, cfg_);
        m = r.value;
        dm = r.d_dist;
      }
      acc.m[s] = m;
      acc.dm_dd[s] = dm;
      acc.arg[s] = best_at;
      acc.dist[s] = best;
      const double w = w_[s];
      const std::size_t cell = (y_[s] * nx_ + x_[s]) * 2;
      acc.wxye[cell + 1] += w * m;
      acc.wxye[cell + 0] += w * (1.0 - m);
      acc.wye[y_[s] * 2 + 1] += w * m;
      acc.wye[y_[s] * 2 + 0] += w * (1.0 - m);
    }
  }
}

double RelaxedObjective::entropy_of(const Accum& acc) const {
  double h = 0.0;
  for (std::size_t y = 0; y < ny_; ++y)
    for (std::size_t x = 0; x < nx_; ++x)
      for (std::size_t e = 0; e < 2; ++e)
        h -= plogp_ratio(acc.wxye[(y * nx_ + x) * 2 + e] / total_, acc.wye[y * 2 + e] / total_);
  return std::max(0.0, h);
}

double RelaxedObjective::base_entropy() const { return base_; }

double RelaxedObjective::relaxed_entropy(const BallEvent& b) const {
  accumulate(b, false, scratch_);
  return entropy_of(scratch_);
}

double RelaxedObjective::hard_entropy(const BallEvent& b) const {
  accumulate(b, true, scratch_);
  return entropy_of(scratch_);
}

EntropyGradient RelaxedObjective::gradient(const BallEvent& b) const {
  if (!(b.radius > 0.0)) throw DegenerateBall("radius must be positive for a gradient");
  Accum& acc = scratch_;
  accumulate(b, false, acc);
  EntropyGradient g;
  g.value = entropy_of(acc);
  g.center.assign(dim_, 0.0);

  // dH/dm_s = (w_s / W) [log2 p(x|y,0) - log2 p(x|y,1)], constant per (y, x) cell.
  acc.dlog.assign(ny_ * nx_, 0.0);
  for (std::size_t y = 0; y < ny_; ++y) {
    const double w0 = acc.wye[y * 2 + 0];
    const double w1 = acc.wye[y * 2 + 1];
    for (std::size_t x = 0; x < nx_; ++x) {
      const double a0 = acc.wxye[(y * nx_ + x) * 2 + 0];
      const double a1 = acc.wxye[(y * nx_ + x) * 2 + 1];
      if (a0 > 0.0 && a1 > 0.0) acc.dlog[y * nx_ + x] = std::log2(a0 / w0) - std::log2(a1 / w1);
    }
  }
  for (std::size_t s = 0; s < x_.size(); ++s) {
    const double dm = acc.dm_dd[s];
    if (dm == 0.0) continue;
    const double dlog = acc.dlog[y_[s] * nx_ + x_[s]];
    if (dlog == 0.0) continue;
    const double dh_dd = w_[s] / total_ * dlog * dm;
    g.radius -= dh_dd;
    const double dist = acc.dist[s];
    if (dist > 0.0) {
      const double* o = points_.data() + acc.arg[s] * dim_;
      for (std::size_t j = 0; j < dim_; ++j) g.center[j] += dh_dd * (b.center[j] - o[j]) / dist;
    }
  }
  return g;
}

EntropyGradient relaxed_entropy_gradient(const Dataset& d, const Variable& target,
                                         std::span<const Variable> parents, const BallEvent& b,
                                         const SoftEventConfig& cfg, const GridSpec& g) {
  if (!(b.radius > 0.0)) throw DegenerateBall("radius must be positive for a gradient");
  return RelaxedObjective(d, target, parents, b.attr, cfg, g).gradient(b);
}

}  // namespace cmrl
