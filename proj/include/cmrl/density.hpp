#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cmrl/trajectory_store.hpp"

namespace cmrl {

/// Exponential kernel exp(-w * ||.||_2) scaled by alpha * w.
struct KernelConfig {
  double w = 1.0;
  double alpha = 1.0;
};

void validate_kernel(const KernelConfig& k);

enum class VarKind { attribute, action, event };
enum class VarRole { target, parent, event };

/// A column of the transition samples: attribute / action at step t + offset,
/// or the binary event column supplied through event weights.
///
/// A sample is an (episode l, step t) pair with t in [0, horizon); a variable
/// with offset 1 reads step t + 1. Every estimator therefore sees exactly
/// horizon * L samples.
struct Variable {
  VarKind kind = VarKind::attribute;
  std::size_t index = 0;
  int offset = 0;
  VarRole role = VarRole::parent;

  static Variable attribute(std::size_t i, int offset, VarRole role = VarRole::parent) {
    return {VarKind::attribute, i, offset, role};
  }
  static Variable action(int offset = 0) { return {VarKind::action, 0, offset, VarRole::parent}; }
  static Variable event() { return {VarKind::event, 0, 0, VarRole::event}; }

  bool operator==(const Variable&) const = default;
};

/// Per-attribute, per-component strictly increasing bin edges.
struct GridSpec {
  std::vector<std::vector<std::vector<double>>> edges;  // [attr][component][edge]

  /// Unit cells for integer-grid attributes, 16 equal bins otherwise.
  static GridSpec defaults(const AttributeSchema& schema, std::size_t continuous_bins = 16);

  std::size_t bin_count(std::size_t attr) const;
  /// Joint (row-major over components) bin of an attribute value.
  std::size_t bin(std::size_t attr, std::span<const double> value) const;
  /// Centre of each component's bin for a joint bin id.
  std::vector<double> bin_center(std::size_t attr, std::size_t joint_bin) const;
};

void validate_grid(const GridSpec& g, const AttributeSchema& schema);

/// Probability mass over the joint bins of a variable list.
///
/// Keys are mixed-radix joint indices; the first variable is the most
/// significant digit.
class Pmf {
 public:
  Pmf(std::vector<Variable> vars, std::vector<std::size_t> cardinality,
      std::map<std::uint64_t, double> table);

  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<std::size_t>& cardinality() const { return card_; }
  const std::map<std::uint64_t, double>& table() const { return table_; }

  double total() const;
  double mass(std::span<const std::size_t> assignment) const;
  std::uint64_t key(std::span<const std::size_t> assignment) const;
  std::vector<std::size_t> decode(std::uint64_t key) const;

  /// Sum out every variable whose position is not listed in `keep`.
  Pmf marginal(std::span<const std::size_t> keep) const;

 private:
  std::vector<Variable> vars_;
  std::vector<std::size_t> card_;
  std::map<std::uint64_t, double> table_;
};

/// Number of samples (steps t with t + max offset <= horizon) per episode.
std::size_t samples_per_episode(const Dataset& d, std::span<const Variable> vars);

/// (alpha w)/(hL) * sum_{l,t} exp(-w * sum_X ||X_query - x_t^l||_2).
/// `query` concatenates the per-variable points in `vars` order.
double kde_density(const Dataset& d, std::span<const Variable> vars, std::span<const double> query,
                   const KernelConfig& k);

/// Frequency counts over discretized variables, optionally soft-weighted.
///
/// `sample_weights` scales each (l, t) sample; `event_weights` gives the
/// probability m that the binary event column is 1 (1 - m goes to 0). Both
/// are laid out row-major over (l, t).
Pmf empirical_pmf(const Dataset& d, std::span<const Variable> vars, const GridSpec& g,
                  std::span<const double> sample_weights = {},
                  std::span<const double> event_weights = {});

/// Draw from the KDE mixture of attribute `attr`: a uniformly chosen observed
/// value perturbed by Laplace-radial noise of rate w, clamped to the domain.
std::vector<double> sample_center(const Dataset& d, std::size_t attr, const KernelConfig& k,
                                  std::mt19937_64& rng);

}  // namespace cmrl
