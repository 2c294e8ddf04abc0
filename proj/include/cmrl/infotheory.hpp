#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cmrl/density.hpp"
#include "cmrl/trajectory_store.hpp"

namespace cmrl {

/// "Attribute `attr` visited Ball(center, radius) at some earlier step."
struct BallEvent {
  std::size_t attr = 0;
  std::vector<double> center;
  double radius = 0.0;

  bool contains(std::span<const double> point) const;
  bool operator==(const BallEvent&) const = default;
};

void validate_ball(const BallEvent& b, const AttributeSchema& schema);

enum class RelaxationForm { logistic, exponential };

struct SoftEventConfig {
  double w_e = 4.0;
  RelaxationForm form = RelaxationForm::logistic;
};

void validate_soft(const SoftEventConfig& cfg);

/// Soft membership phi(d, r) and its derivative with respect to d
/// (the derivative with respect to r is the negation).
struct Relaxed {
  double value;
  double d_dist;
};
Relaxed relax(double dist, double radius, const SoftEventConfig& cfg);

/// H(X | conditioners) in bits for a Pmf with exactly one target variable.
double conditional_entropy(const Pmf& p);

inline double information_gain(double h_without, double h_with) { return h_without - h_with; }

/// m_t^l = phi(min_{t' < t} ||o_{t'} - c||, r) for t in [0, horizon); the
/// first sample of each episode has an empty past and weight 0.
std::vector<double> soft_event_weights(const Dataset& d, const BallEvent& b,
                                       const SoftEventConfig& cfg);

/// Hard indicator version of soft_event_weights (inclusive boundary).
std::vector<double> hard_event_weights(const Dataset& d, const BallEvent& b);

/// Reference route: soft-weighted empirical_pmf over (X, pa, E) followed by
/// conditional_entropy.
double relaxed_conditional_entropy(const Dataset& d, const Variable& target,
                                   std::span<const Variable> parents, const BallEvent& b,
                                   const SoftEventConfig& cfg, const GridSpec& g,
                                   std::span<const double> sample_weights = {});

struct EntropyGradient {
  double value = 0.0;
  std::vector<double> center;
  double radius = 0.0;
};

/// Relaxed conditional entropy of X given pa and a ball event on one
/// attribute, with the discretization and past-distance bookkeeping done once
/// so that (center, radius) can be re-evaluated cheaply. Evaluations reuse an
/// internal workspace, so one instance must not be shared across threads.
class RelaxedObjective {
 public:
  RelaxedObjective(const Dataset& d, const Variable& target, std::span<const Variable> parents,
                   std::size_t attr, const SoftEventConfig& cfg, const GridSpec& g,
                   std::span<const double> sample_weights = {});

  std::size_t attribute() const { return attr_; }

  /// H(X | pa) without the event.
  double base_entropy() const;
  double relaxed_entropy(const BallEvent& b) const;
  double hard_entropy(const BallEvent& b) const;
  /// Analytic gradient; the argmin of each running minimum is held fixed and
  /// ties go to the earliest step.
  EntropyGradient gradient(const BallEvent& b) const;

 private:
  struct Accum {
    std::vector<double> m;          // per relevant sample event weight
    std::vector<double> dm_dd;      // per relevant sample d phi / d dist
    std::vector<std::size_t> arg;   // per relevant sample argmin point
    std::vector<double> dist;       // per relevant sample running min distance
    std::vector<double> wxye;       // [y][x][e]
    std::vector<double> wye;        // [y][e]
    std::vector<double> dlog;       // [y][x]
  };
  struct EpisodeSpan {
    std::size_t first_sample;  // into relevant samples
    std::size_t last_sample;
    std::size_t first_point;   // into distinct points
    std::size_t last_point;
  };
  void accumulate(const BallEvent& b, bool hard, Accum& acc) const;
  double entropy_of(const Accum& acc) const;

  // Samples whose parent configuration admits a single target value add
  // nothing to the entropy or its gradient, so only the others are kept.
  std::size_t attr_;
  std::size_t dim_;
  SoftEventConfig cfg_;
  std::size_t nx_ = 0;           // distinct target bins
  std::size_t ny_ = 0;           // stochastic parent configurations
  std::vector<std::size_t> x_;   // per relevant sample, dense target id
  std::vector<std::size_t> y_;   // per relevant sample, dense parent id
  std::vector<double> w_;        // per relevant sample weight
  std::vector<std::size_t> t_;   // per relevant sample step
  double total_ = 0.0;           // weight of all samples
  double base_ = 0.0;
  // Distinct observed points of each episode in order of first visit.
  std::vector<double> points_;
  std::vector<std::size_t> first_visit_;
  std::vector<EpisodeSpan> spans_;
  mutable Accum scratch_;
};

/// Throws DegenerateBall when the radius is 0.
EntropyGradient relaxed_entropy_gradient(const Dataset& d, const Variable& target,
                                         std::span<const Variable> parents, const BallEvent& b,
                                         const SoftEventConfig& cfg, const GridSpec& g);

}  // namespace cmrl
