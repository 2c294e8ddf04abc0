#include "cmrl/trajectory_store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cmrl/error.hpp"

namespace cmrl {

using nlohmann::json;

namespace {

std::string where(std::size_t l, std::size_t t) {
  return "episode " + std::to_string(l) + ", step " + std::to_string(t);
}

}  // namespace

std::string kind_name(AttributeKind k) {
  return k == AttributeKind::integer_grid ? "integer-grid" : "continuous";
}

AttributeKind kind_from_name(const std::string& s) {
  if (s == "integer-grid") return AttributeKind::integer_grid;
  if (s == "continuous") return AttributeKind::continuous;
  throw ParseError("unknown attribute kind '" + s + "'");
}

double AttributeSpec::domain_radius() const {
  double sq = 0.0;
  for (std::size_t j = 0; j < lower.size(); ++j) {
    const double e = upper[j] - lower[j];
    sq += e * e;
  }
  return 0.5 * std::sqrt(sq);
}

void validate_schema(const AttributeSchema& schema) {
  if (schema.attributes.empty()) throw SchemaViolation("schema has no attributes");
  if (schema.action_count < 1) throw SchemaViolation("action_count must be positive");
  for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
    const auto& a = schema.attributes[i];
    const std::string tag = "attribute " + std::to_string(i) + " ('" + a.name + "')";
    if (a.dim == 0) throw SchemaViolation(tag + ": dim must be positive");
    if (a.lower.size() != a.dim || a.upper.size() != a.dim)
      throw SchemaViolation(tag + ": bounds length differs from dim");
    for (std::size_t j = 0; j < a.dim; ++j) {
      if (!(a.lower[j] < a.upper[j]))
        throw SchemaViolation(tag + ": lower must be < upper in component " + std::to_string(j));
    }
  }
  if (schema.reward_attr >= schema.attributes.size())
    throw SchemaViolation("reward_attr out of range");
  if (schema.attributes[schema.reward_attr].dim != 1)
    throw SchemaViolation("reward attribute must have dim 1");
}

void validate_dataset(const Dataset& d) {
  validate_schema(d.schema);
  if (d.episodes.empty()) throw EmptyDataset("dataset has no episodes");
  const auto& attrs = d.schema.attributes;
  for (std::size_t l = 0; l < d.episodes.size(); ++l) {
    const auto& ep = d.episodes[l];
    if (ep.size() != d.horizon + 1)
      throw SchemaViolation("episode " + std::to_string(l) + " has " + std::to_string(ep.size()) +
                            " steps, expected horizon+1 = " + std::to_string(d.horizon + 1));
    for (std::size_t t = 0; t < ep.size(); ++t) {
      const Step& s = ep[t];
      if (s.action < 0 || s.action >= d.schema.action_count)
        throw SchemaViolation(where(l, t) + ": action " + std::to_string(s.action) + " out of range");
      if (s.obs.size() != attrs.size())
        throw SchemaViolation(where(l, t) + ": expected " + std::to_string(attrs.size()) +
                              " attribute vectors");
      for (std::size_t i = 0; i < attrs.size(); ++i) {
        const auto& spec = attrs[i];
        if (s.obs[i].size() != spec.dim)
          throw SchemaViolation(where(l, t) + ", attribute " + spec.name + ": wrong dimension");
        for (std::size_t j = 0; j < spec.dim; ++j) {
          const double v = s.obs[i][j];
          if (!std::isfinite(v) || v < spec.lower[j] || v > spec.upper[j])
            throw SchemaViolation(where(l, t) + ", attribute " + spec.name + ": component " +
                                  std::to_string(j) + " out of bounds");
          if (spec.kind == AttributeKind::integer_grid && v != std::round(v))
            throw SchemaViolation(where(l, t) + ", attribute " + spec.name +
                                  ": non-integral value on integer grid");
        }
      }
    }
  }
}

std::string dataset_to_jsonl(const Dataset& d) {
  json header;
  header["action_count"] = d.schema.action_count;
  header["reward_attr"] = d.schema.reward_attr;
  header["horizon"] = d.horizon;
  json attrs = json::array();
  for (const auto& a : d.schema.attributes) {
    attrs.push_back({{"name", a.name},
                     {"dim", a.dim},
                     {"lower", a.lower},
                     {"upper", a.upper},
                     {"kind", kind_name(a.kind)}});
  }
  header["attributes"] = std::move(attrs);
  if (!d.config.empty()) header["config"] = json::parse(d.config);

  std::string out = header.dump();
  out += '\n';
  for (const auto& ep : d.episodes) {
    json steps = json::array();
    for (const auto& s : ep) steps.push_back({{"obs", s.obs}, {"action", s.action}});
    out += json{{"steps", std::move(steps)}}.dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  Dataset d;
  bool have_header = false;

  auto fail = [&](const std::string& msg) {
    return ParseError("line " + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(e.what());
    }
    try {
      if (!have_header) {
        for (const char* key : {"attributes", "action_count", "reward_attr", "horizon"})
          if (!j.contains(key)) throw fail(std::string("schema missing \"") + key + "\"");
        for (const auto& a : j.at("attributes")) {
          for (const char* key : {"name", "dim", "lower", "upper", "kind"})
            if (!a.contains(key)) throw fail(std::string("attribute missing \"") + key + "\"");
          AttributeSpec spec;
          spec.name = a.at("name").get<std::string>();
          spec.dim = a.at("dim").get<std::size_t>();
          spec.lower = a.at("lower").get<std::vector<double>>();
          spec.upper = a.at("upper").get<std::vector<double>>();
          spec.kind = kind_from_name(a.at("kind").get<std::string>());
          d.schema.attributes.push_back(std::move(spec));
        }
        d.schema.action_count = j.at("action_count").get<int>();
        d.schema.reward_attr = j.at("reward_attr").get<std::size_t>();
        d.horizon = j.at("horizon").get<std::size_t>();
        if (j.contains("config")) d.config = j.at("config").dump();
        have_header = true;
        continue;
      }
      if (!j.contains("steps")) throw fail("episode missing \"steps\"");
      Episode ep;
      for (const auto& s : j.at("steps")) {
        if (!s.contains("obs")) throw fail("step missing \"obs\"");
        if (!s.contains("action")) throw fail("step missing \"action\"");
        Step step;
        step.obs = s.at("obs").get<std::vector<std::vector<double>>>();
        step.action = s.at("action").get<int>();
        ep.push_back(std::move(step));
      }
      d.episodes.push_back(std::move(ep));
    } catch (const json::exception& e) {
      throw fail(e.what());
    }
  }
  if (!have_header) throw ParseError("line 1: missing schema header");
  validate_dataset(d);
  return d;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_from_jsonl(buf.str());
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  validate_dataset(d);
  const std::string text = dataset_to_jsonl(d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<AttributeSample> attribute_samples(const Dataset& d, std::size_t attr,
                                               std::optional<StepRange> range) {
  if (attr >= d.schema.size()) throw IndexError("attribute index " + std::to_string(attr));
  StepRange r = range.value_or(StepRange{0, d.horizon});
  if (r.first > r.last || r.last > d.horizon) throw IndexError("step range outside [0, horizon]");
  std::vector<AttributeSample> out;
  out.reserve(d.episodes.size() * (r.last - r.first + 1));
  for (std::size_t l = 0; l < d.episodes.size(); ++l)
    for (std::size_t t = r.first; t <= r.last; ++t)
      out.push_back({l, t, d.episodes[l][t].obs[attr]});
  return out;
}

}  // namespace cmrl
