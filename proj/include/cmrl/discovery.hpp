#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "cmrl/density.hpp"
#include "cmrl/infotheory.hpp"
#include "cmrl/memory.hpp"
#include "cmrl/trajectory_store.hpp"

namespace cmrl {

struct DiscoveryConfig {
  double epsilon = 1e-4;          // bits
  std::size_t max_var = 0;        // 0 means n + 1 + 8
  std::size_t restarts = 64;
  double eps_grad_center = 1e-5;
  double eps_grad_radius = 1e-5;
  double step_center = 0.1;
  double step_radius = 0.1;
  std::size_t max_grad_iters = 500;
  double min_gain = 5e-4;         // bits; smaller gains do not create a unit
  double r_min = 0.25;
  bool prune = true;              // drop units made redundant by later ones
  KernelConfig kernel;
  SoftEventConfig soft;
  std::optional<GridSpec> grid;   // defaults from the schema when unset
  std::uint64_t seed = 0;

  std::size_t effective_max_var(std::size_t attributes) const {
    return max_var == 0 ? attributes + 1 + 8 : max_var;
  }
};

void validate_discovery_config(const DiscoveryConfig& cfg, std::size_t attributes);

enum class NodeKind { attribute, action, memory };

/// A variable of the DBN at step t (parents) or t + 1 (children).
struct Node {
  NodeKind kind = NodeKind::attribute;
  std::size_t index = 0;

  auto operator<=>(const Node&) const = default;
};

struct CausalGraph {
  std::map<Node, std::vector<Node>> parents;
  std::vector<MemoryUnit> units;

  /// Every attribute gets {O^1_t, ..., O^n_t, A_t}.
  static CausalGraph initial(std::size_t attributes);
  bool operator==(const CausalGraph&) const = default;
};

struct UnitRecord {
  std::size_t attr = 0;
  std::vector<double> center;
  double radius = 0.0;
  double gain = 0.0;
  std::size_t iterations = 0;
  std::size_t target = 0;
};

struct EntropyRecord {
  double initial = 0.0;
  double final = 0.0;
};

struct DiscoveryReport {
  std::map<std::size_t, EntropyRecord> entropies;  // per attribute
  std::vector<UnitRecord> units;   // parallel to CausalGraph::units
  std::vector<UnitRecord> pruned;
  double wall_clock_seconds = 0.0;
  DiscoveryConfig config;
};

struct StochasticVariable {
  std::size_t attr = 0;
  double entropy = 0.0;
};

/// H(O^i_{t+1} | O^1_t..O^n_t, A_t) for every attribute.
std::vector<StochasticVariable> transition_entropies(const Dataset& d, const GridSpec& g);

/// Attributes whose transition entropy exceeds epsilon, highest first.
std::vector<StochasticVariable> identify_stochastic(const Dataset& d, const DiscoveryConfig& cfg);

struct BallSearch {
  BallEvent ball;
  double gain = 0.0;  // hard-indicator information gain in bits
  std::size_t iterations = 0;
  std::size_t restart = 0;
};

/// Best of `restarts` gradient descents of the relaxed entropy of `target`
/// given `parents` and a ball event on attribute `attr`.
///
/// `d` may carry memory columns after the observable attributes; balls are
/// searched only on the attribute given.
BallSearch optimize_ball(const Dataset& d, std::size_t target, std::span<const Variable> parents,
                         std::size_t attr, const DiscoveryConfig& cfg, std::mt19937_64& rng);

struct DiscoveryResult {
  CausalGraph graph;
  DiscoveryReport report;
};

/// Greedy causal graph construction over the observable attributes of `d`.
DiscoveryResult discover(const Dataset& d, const DiscoveryConfig& cfg);

/// Parent nodes translated to estimator columns of augment_dataset(d, units).
std::vector<Variable> parent_columns(std::span<const Node> parents, std::size_t attributes);

}  // namespace cmrl
