#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmrl/discovery.hpp"
#include "cmrl/pipeline.hpp"
#include "cmrl/planner.hpp"
#include "cmrl/sim.hpp"

namespace cmrl {

enum class Task { painting, tire, custom };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct ReportConfig {
  std::vector<std::size_t> steps{20000, 50000, 100000};  // training time-steps per run
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<int> placements{0, 1, 2, 3, 4};
  std::vector<std::size_t> windows{1, 2, 4};  // history-stacking baselines
};

/// Everything a command needs. Every field has a default.
struct RunConfig {
  Task task = Task::painting;
  std::uint64_t seed = 0;
  int placement = 0;
  std::filesystem::path out_dir = ".";
  std::size_t episodes = 500;
  std::size_t test_episodes = 500;
  std::size_t eval_episodes = 200;
  Method method = Method::full;
  std::size_t window = 2;

  std::uint64_t layout_seed = 0;  // placement geometry
  PaintingConfig painting;
  TireConfig tire;

  DiscoveryConfig discovery;
  PlannerConfig planner;
  ReportConfig report;
};

/// Parses TOML-style text: `[section]` headers, `key = value` lines, `#`
/// comments. Values are JSON scalars or arrays; bare words are strings.
/// Unknown sections or keys raise ConfigError.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Sets one `section.key`; `value` uses the same syntax as the file.
void set_config_value(RunConfig& cfg, const std::string& dotted_key, const std::string& value);

/// Every recognised `section.key`.
std::vector<std::string> config_keys();

nlohmann::json to_json(const RunConfig& cfg);

void validate_run_config(const RunConfig& cfg);

/// Simulator for the configured task and placement (not for custom tasks).
LatchEnv make_env(const RunConfig& cfg, int placement);

/// Stream seeds derived from the run seed.
std::uint64_t training_seed(std::uint64_t seed);
std::uint64_t test_seed(std::uint64_t seed);
std::uint64_t eval_seed(std::uint64_t seed);

/// One row of the evaluation CSV.
struct EvalRow {
  Task task = Task::painting;
  std::uint64_t seed = 0;
  int placement = 0;
  std::size_t episodes = 0;
  std::optional<double> mean_reward;
  std::optional<double> success_rate;
  RewardMetrics metrics;
  Method method = Method::full;
};

std::string eval_csv_header();
std::string eval_csv_row(const EvalRow& row);

/// Trains `method` on `d` (discovering units for the full method).
LearnedAgent train(const Dataset& d, Method method, std::size_t window, const RunConfig& cfg,
                   std::uint64_t seed, DiscoveryResult* discovery = nullptr);

struct CurvePoint {
  Task task = Task::painting;
  std::string method;  // full, markov, stacking-w
  std::size_t steps = 0;
  std::size_t episodes = 0;
  std::size_t runs = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
};

/// Average test reward against training time-steps, over report seeds and
/// placements. Rows are ordered by steps, then method.
std::vector<CurvePoint> learning_curve(const RunConfig& cfg);

std::string curve_csv(const std::vector<CurvePoint>& points);

}  // namespace cmrl
