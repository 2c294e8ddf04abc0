#include "cmrl/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmrl/error.hpp"

namespace cmrl {

void validate_kernel(const KernelConfig& k) {
  if (!(k.w > 0.0) || !(k.alpha > 0.0)) throw ConfigError("kernel w and alpha must be positive");
}

GridSpec GridSpec::defaults(const AttributeSchema& schema, std::size_t continuous_bins) {
  GridSpec g;
  for (const auto& a : schema.attributes) {
    std::vector<std::vector<double>> per_component;
    for (std::size_t j = 0; j < a.dim; ++j) {
      std::vector<double> e;
      if (a.kind == AttributeKind::integer_grid) {
        const auto lo = static_cast<long>(std::llround(a.lower[j]));
        const auto hi = static_cast<long>(std::llround(a.upper[j]));
        for (long v = lo; v <= hi + 1; ++v) e.push_back(static_cast<double>(v) - 0.5);
      } else {
        for (std::size_t b = 0; b <= continuous_bins; ++b)
          e.push_back(a.lower[j] + (a.upper[j] - a.lower[j]) * static_cast<double>(b) /
                                       static_cast<double>(continuous_bins));
      }
      per_component.push_back(std::move(e));
    }
    g.edges.push_back(std::move(per_component));
  }
  return g;
}

std::size_t GridSpec::bin_count(std::size_t attr) const {
  std::size_t n = 1;
  for (const auto& e : edges.at(attr)) n *= e.size() - 1;
  return n;
}

std::size_t GridSpec::bin(std::size_t attr, std::span<const double> value) const {
  const auto& comps = edges.at(attr);
  if (value.size() != comps.size()) throw DimensionMismatch("value dimension differs from grid");
  std::size_t joint = 0;
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const auto& e = comps[j];
    const std::size_t nb = e.size() - 1;
    auto it = std::upper_bound(e.begin(), e.end(), value[j]);
    std::size_t b = it == e.begin() ? 0 : static_cast<std::size_t>(it - e.begin()) - 1;
    b = std::min(b, nb - 1);
    joint = joint * nb + b;
  }
  return joint;
}

std::vector<double> GridSpec::bin_center(std::size_t attr, std::size_t joint_bin) const {
  const auto& comps = edges.at(attr);
  std::vector<double> c(comps.size());
  for (std::size_t j = comps.size(); j-- > 0;) {
    const std::size_t nb = comps[j].size() - 1;
    const std::size_t b = joint_bin % nb;
    joint_bin /= nb;
    c[j] = 0.5 * (comps[j][b] + comps[j][b + 1]);
  }
  return c;
}

void validate_grid(const GridSpec& g, const AttributeSchema& schema) {
  if (g.edges.size() < schema.size()) throw ConfigError("grid does not cover every attribute");
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& a = schema.attributes[i];
    if (g.edges[i].size() != a.dim) throw ConfigError("grid dimension mismatch for " + a.name);
    for (std::size_t j = 0; j < a.dim; ++j) {
      const auto& e = g.edges[i][j];
      if (e.size() < 2) throw ConfigError("grid needs at least one bin for " + a.name);
      for (std::size_t b = 1; b < e.size(); ++b)
        if (!(e[b - 1] < e[b])) throw ConfigError("grid edges not strictly increasing for " + a.name);
      if (e.front() > a.lower[j] || e.back() < a.upper[j])
        throw ConfigError("grid edges do not cover the domain of " + a.name);
    }
  }
}

Pmf::Pmf(std::vector<Variable> vars, std::vector<std::size_t> cardinality,
         std::map<std::uint64_t, double> table)
    : vars_(std::move(vars)), card_(std::move(cardinality)), table_(std::move(table)) {
  if (vars_.size() != card_.size()) throw DimensionMismatch("one cardinality per variable");
  for (const auto& [k, m] : table_)
    if (!(m >= 0.0)) throw MalformedPmf("negative or NaN mass");
}

double Pmf::total() const {
  double s = 0.0;
  for (const auto& [k, m] : table_) s += m;
  return s;
}

std::uint64_t Pmf::key(std::span<const std::size_t> assignment) const {
  if (assignment.size() != card_.size()) throw DimensionMismatch("assignment length");
  std::uint64_t k = 0;
  for (std::size_t v = 0; v < card_.size(); ++v) {
    if (assignment[v] >= card_[v]) throw IndexError("assignment out of range");
    k = k * card_[v] + assignment[v];
  }
  return k;
}

std::vector<std::size_t> Pmf::decode(std::uint64_t key) const {
  std::vector<std::size_t> a(card_.size());
  for (std::size_t v = card_.size(); v-- > 0;) {
    a[v] = static_cast<std::size_t>(key % card_[v]);
    key /= card_[v];
  }
  return a;
}

double Pmf::mass(std::span<const std::size_t> assignment) const {
  auto it = table_.find(key(assignment));
  return it == table_.end() ? 0.0 : it->second;
}

Pmf Pmf::marginal(std::span<const std::size_t> keep) const {
  std::vector<Variable> vars;
  std::vector<std::size_t> card;
  for (std::size_t v : keep) {
    vars.push_back(vars_.at(v));
    card.push_back(card_.at(v));
  }
  std::map<std::uint64_t, double> table;
  for (const auto& [k, m] : table_) {
    const auto a = decode(k);
    std::uint64_t nk = 0;
    for (std::size_t p = 0; p < keep.size(); ++p) nk = nk * card[p] + a[keep[p]];
    table[nk] += m;
  }
  return Pmf(std::move(vars), std::move(card), std::move(table));
}

std::size_t samples_per_episode(const Dataset& d, std::span<const Variable> vars) {
  for (const auto& v : vars)
    if (v.offset < 0 || v.offset > 1) throw IndexError("variable offsets must be 0 or 1");
  return d.horizon;
}

namespace {

void check_var(const Dataset& d, const Variable& v) {
  if (v.kind == VarKind::attribute && v.index >= d.schema.size())
    throw IndexError("attribute index " + std::to_string(v.index));
}

}  // namespace

double kde_density(const Dataset& d, std::span<const Variable> vars, std::span<const double> query,
                   const KernelConfig& k) {
  validate_kernel(k);
  if (d.episodes.empty() || d.horizon == 0) throw EmptyDataset("no samples for KDE");
  std::size_t qdim = 0;
  for (const auto& v : vars) {
    check_var(d, v);
    if (v.kind == VarKind::event) throw DimensionMismatch("KDE does not take event columns");
    qdim += v.kind == VarKind::attribute ? d.schema.attributes[v.index].dim : 1;
  }
  if (qdim != query.size())
    throw DimensionMismatch("query has " + std::to_string(query.size()) + " components, expected " +
                            std::to_string(qdim));
  const std::size_t T = samples_per_episode(d, vars);

  double sum = 0.0;
  for (std::size_t l = 0; l < d.episodes.size(); ++l) {
    for (std::size_t t = 0; t < T; ++t) {
      double dist = 0.0;
      std::size_t q = 0;
      for (const auto& v : vars) {
        const std::size_t step = t + static_cast<std::size_t>(v.offset);
        if (v.kind == VarKind::action) {
          dist += std::abs(query[q++] - d.action(l, step));
          continue;
        }
        double sq = 0.0;
        for (double x : d.obs(l, step, v.index)) {
          const double diff = query[q++] - x;
          sq += diff * diff;
        }
        dist += std::sqrt(sq);
      }
      sum += std::exp(-k.w * dist);
    }
  }
  const double n = static_cast<double>(T * d.episodes.size());
  return k.alpha * k.w * sum / n;
}

Pmf empirical_pmf(const Dataset& d, std::span<const Variable> vars, const GridSpec& g,
                  std::span<const double> sample_weights, std::span<const double> event_weights) {
  if (d.episodes.empty() || d.horizon == 0) throw EmptyDataset("no samples for pmf");
  const std::size_t T = samples_per_episode(d, vars);
  const std::size_t n = T * d.episodes.size();

  std::vector<std::size_t> card;
  std::ptrdiff_t event_pos = -1;
  for (std::size_t p = 0; p < vars.size(); ++p) {
    const auto& v = vars[p];
    check_var(d, v);
    switch (v.kind) {
      case VarKind::attribute:
        card.push_back(g.bin_count(v.index));
        break;
      case VarKind::action:
        card.push_back(static_cast<std::size_t>(d.schema.action_count));
        break;
      case VarKind::event:
        if (event_pos >= 0) throw DimensionMismatch("at most one event column");
        event_pos = static_cast<std::ptrdiff_t>(p);
        card.push_back(2);
        break;
    }
  }
  if (!sample_weights.empty() && sample_weights.size() != n)
    throw DimensionMismatch("sample weights need one entry per (l, t) sample");
  if (event_pos >= 0 && event_weights.size() != n)
    throw DimensionMismatch("event weights need one entry per (l, t) sample");
  if (event_pos < 0 && !event_weights.empty())
    throw DimensionMismatch("event weights given without an event column");

  std::map<std::uint64_t, double> table;
  double total = 0.0;
  std::vector<std::size_t> assign(vars.size());
  for (std::size_t l = 0; l < d.episodes.size(); ++l) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t s = l * T + t;
      const double sw = sample_weights.empty() ? 1.0 : sample_weights[s];
      if (!(sw >= 0.0) || !std::isfinite(sw)) throw DimensionMismatch("sample weight must be >= 0");
      if (sw == 0.0) continue;
      for (std::size_t p = 0; p < vars.size(); ++p) {
        const auto& v = vars[p];
        const std::size_t step = t + static_cast<std::size_t>(v.offset);
        if (v.kind == VarKind::attribute)
          assign[p] = g.bin(v.index, d.obs(l, step, v.index));
        else if (v.kind == VarKind::action)
          assign[p] = static_cast<std::size_t>(d.action(l, step));
      }
      if (event_pos < 0) {
        std::uint64_t k = 0;
        for (std::size_t p = 0; p < vars.size(); ++p) k = k * card[p] + assign[p];
        table[k] += sw;
        total += sw;
        continue;
      }
      const double m = event_weights[s];
      if (!(m >= 0.0 && m <= 1.0)) throw DimensionMismatch("event weight outside [0, 1]");
      for (std::size_t e = 0; e < 2; ++e) {
        const double w = sw * (e == 1 ? m : 1.0 - m);
        if (w == 0.0) continue;
        assign[static_cast<std::size_t>(event_pos)] = e;
        std::uint64_t k = 0;
        for (std::size_t p = 0; p < vars.size(); ++p) k = k * card[p] + assign[p];
        table[k] += w;
      }
      total += sw;
    }
  }
  if (total <= 0.0) throw AllZeroWeights("every sample has zero weight");
  for (auto& [k, m] : table) m /= total;
  return Pmf(std::vector<Variable>(vars.begin(), vars.end()), std::move(card), std::move(table));
}

std::vector<double> sample_center(const Dataset& d, std::size_t attr, const KernelConfig& k,
                                  std::mt19937_64& rng) {
  validate_kernel(k);
  if (attr >= d.schema.size()) throw IndexError("attribute index " + std::to_string(attr));
  if (d.episodes.empty() || d.horizon == 0) throw EmptyDataset("no samples to draw a center from");
  const auto& spec = d.schema.attributes[attr];
  const std::size_t T = d.horizon;
  std::uniform_int_distribution<std::size_t> pick(0, T * d.episodes.size() - 1);
  const std::size_t s = pick(rng);
  const auto base = d.obs(s / T, s % T, attr);
  std::vector<double> c(base.begin(), base.end());

  // Radial density of exp(-w r) in `dim` dimensions is Gamma(dim, 1/w).
  std::gamma_distribution<double> radial(static_cast<double>(spec.dim), 1.0 / k.w);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double radius = radial(rng);
  std::vector<double> dir(spec.dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : dir) {
      x = gauss(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (std::size_t j = 0; j < spec.dim; ++j)
    c[j] = std::clamp(c[j] + radius * dir[j] / norm, spec.lower[j], spec.upper[j]);
  return c;
}

}  // namespace cmrl
