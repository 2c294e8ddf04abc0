#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "cmrl/discovery.hpp"
#include "cmrl/pipeline.hpp"
#include "cmrl/planner.hpp"

namespace cmrl {

using nlohmann::json;

json to_json(const AttributeSchema& s);
AttributeSchema schema_from_json(const json& j);

json to_json(const DiscoveryConfig& c);
DiscoveryConfig discovery_config_from_json(const json& j);

json to_json(const PlannerConfig& c);
PlannerConfig planner_config_from_json(const json& j);

json to_json(const MemoryUnit& u);
MemoryUnit memory_unit_from_json(const json& j);

/// Parent lists and memory units. Contains nothing run-dependent.
json to_json(const CausalGraph& g);
CausalGraph graph_from_json(const json& j);

/// Includes the wall-clock time, so it is not byte-stable across runs.
json to_json(const DiscoveryReport& r);

json to_json(const TabularModel& m);
TabularModel model_from_json(const json& j);

json to_json(const PolicyTable& p);
PolicyTable policy_from_json(const json& j);

/// State description, model, value table and policy of a learned agent.
json agent_model_json(const LearnedAgent& a);
json agent_policy_json(const LearnedAgent& a);
/// Rebuilds an agent from the two documents above.
LearnedAgent agent_from_json(const json& model, const json& policy);

/// Canonical text: sorted keys, two-space indent, trailing newline.
std::string dump(const json& j);
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace cmrl
