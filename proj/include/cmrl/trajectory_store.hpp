#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cmrl {

enum class AttributeKind { continuous, integer_grid };

/// "integer-grid" or "continuous", as written in dataset files.
std::string kind_name(AttributeKind k);
AttributeKind kind_from_name(const std::string& s);

/// One observable attribute O^i and its box-shaped domain.
struct AttributeSpec {
  std::string name;
  std::size_t dim = 1;
  std::vector<double> lower;
  std::vector<double> upper;
  AttributeKind kind = AttributeKind::continuous;

  /// Half the diagonal of the domain box.
  double domain_radius() const;

  bool operator==(const AttributeSpec&) const = default;
};

struct AttributeSchema {
  std::vector<AttributeSpec> attributes;
  int action_count = 1;
  std::size_t reward_attr = 0;

  std::size_t size() const { return attributes.size(); }
  bool operator==(const AttributeSchema&) const = default;
};

struct Step {
  std::vector<std::vector<double>> obs;  // one vector per attribute
  int action = 0;

  bool operator==(const Step&) const = default;
};

using Episode = std::vector<Step>;

/// L episodes of exactly horizon+1 steps (z_0, a_0, ..., z_h, a_h).
///
/// Treated as immutable once built; every consumer takes it by const
/// reference. Call validate_dataset() before handing a hand-built dataset to
/// the estimators.
struct Dataset {
  AttributeSchema schema;
  std::size_t horizon = 0;
  std::vector<Episode> episodes;
  std::string config;  // JSON echo of the producing run; empty when unknown

  std::size_t episode_count() const { return episodes.size(); }
  std::span<const double> obs(std::size_t l, std::size_t t, std::size_t attr) const {
    return episodes[l][t].obs[attr];
  }
  int action(std::size_t l, std::size_t t) const { return episodes[l][t].action; }

  bool operator==(const Dataset&) const = default;
};

void validate_schema(const AttributeSchema& schema);

/// Throws SchemaViolation or EmptyDataset.
void validate_dataset(const Dataset& d);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

/// Serialization used by save_dataset; exposed for byte-level tests.
std::string dataset_to_jsonl(const Dataset& d);
Dataset dataset_from_jsonl(const std::string& text);

/// Inclusive step interval [first, last].
struct StepRange {
  std::size_t first = 0;
  std::size_t last = 0;
};

struct AttributeSample {
  std::size_t episode = 0;
  std::size_t step = 0;
  std::vector<double> value;
};

/// All values of attribute `attr` in row-major (episode, step) order.
std::vector<AttributeSample> attribute_samples(const Dataset& d, std::size_t attr,
                                               std::optional<StepRange> range = std::nullopt);

}  // namespace cmrl
