#include "cmrl/memory.hpp"

#include "cmrl/error.hpp"

namespace cmrl {

void validate_units(std::span<const MemoryUnit> units, const AttributeSchema& schema) {
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (units[k].id != k) throw SchemaViolation("memory unit ids must be dense and ordered");
    validate_ball(units[k].event, schema);
  }
}

MemoryState memory_step(const MemoryState& s, std::span<const std::vector<double>> obs,
                        std::span<const MemoryUnit> units) {
  if (s.bits.size() != units.size()) throw DimensionMismatch("memory state and unit count differ");
  MemoryState next = s;
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (next.bits[k]) continue;
    const auto& ev = units[k].event;
    if (ev.attr >= obs.size()) throw DimensionMismatch("observation lacks attribute for unit");
    if (obs[ev.attr].size() != ev.center.size())
      throw DimensionMismatch("observation dimension differs from unit ball");
    if (ev.contains(obs[ev.attr])) next.bits[k] = 1;
  }
  return next;
}

Dataset augment_dataset(const Dataset& d, std::span<const MemoryUnit> units) {
  Dataset out = d;
  const std::size_t n = d.schema.size();
  // Continue any existing mem_k numbering.
  std::size_t existing = 0;
  for (const auto& a : d.schema.attributes)
    if (a.name.rfind("mem_", 0) == 0) ++existing;
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (units[k].event.attr >= n)
      throw IndexError("unit refers to attribute " + std::to_string(units[k].event.attr));
    out.schema.attributes.push_back(AttributeSpec{
        "mem_" + std::to_string(existing + k), 1, {0.0}, {1.0}, AttributeKind::integer_grid});
  }

  for (auto& ep : out.episodes) {
    MemoryState m = MemoryState::initial(units.size());
    for (auto& step : ep) {
      const MemoryState next = memory_step(m, step.obs, units);
      for (int bit : m.bits) step.obs.push_back({static_cast<double>(bit)});
      m = next;
    }
  }
  return out;
}

}  // namespace cmrl
