#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cmrl/infotheory.hpp"
#include "cmrl/trajectory_store.hpp"

namespace cmrl {

/// Binary latch M^(k): 0 until its ball event fires, 1 afterwards.
struct MemoryUnit {
  std::size_t id = 0;
  BallEvent event;

  bool operator==(const MemoryUnit&) const = default;
};

void validate_units(std::span<const MemoryUnit> units, const AttributeSchema& schema);

struct MemoryState {
  std::vector<int> bits;

  static MemoryState initial(std::size_t units) { return {std::vector<int>(units, 0)}; }
  bool operator==(const MemoryState&) const = default;
};

/// Bit k at t+1 is set iff it was set at t or obs[attr_k] lies in ball k (inclusive).
MemoryState memory_step(const MemoryState& s, std::span<const std::vector<double>> obs,
                        std::span<const MemoryUnit> units);

/// Appends one binary integer-grid attribute "mem_k" per unit holding M_t.
Dataset augment_dataset(const Dataset& d, std::span<const MemoryUnit> units);

}  // namespace cmrl
