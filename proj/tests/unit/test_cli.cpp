#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cmrl/cli.hpp"
#include "cmrl/error.hpp"
#include "cmrl/experiment.hpp"
#include "cmrl/serialize.hpp"

namespace cmrl {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() /
          ("cmrl_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    ::unsetenv("CMRL_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir);
    ::unsetenv("CMRL_SEED");
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

TEST(Config, ParsesSectionsCommentsAndBareWords) {
  const RunConfig c = parse_config(
      "# top comment\n"
      "[run]\n"
      "task = tire   # trailing comment\n"
      "seed = 42\n"
      "method = \"stacking\"\n"
      "window = 4\n"
      "\n"
      "[env]\n"
      "horizon = 50\n"
      "bucket = [1, 2, 3]\n"
      "[discovery]\n"
      "soft_form = exponential\n"
      "prune = false\n"
      "epsilon = 0.5\n"
      "[planner]\n"
      "gamma = 0.9\n"
      "[report]\n"
      "steps = [100, 200]\n"
      "windows = [3]\n");
  EXPECT_EQ(c.task, Task::tire);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.method, Method::stacking);
  EXPECT_EQ(c.window, 4u);
  EXPECT_EQ(c.painting.horizon, 50u);
  EXPECT_EQ(c.tire.horizon, 50u);
  EXPECT_EQ(c.painting.bucket, (Cell{1, 2, 3}));
  EXPECT_EQ(c.discovery.soft.form, RelaxationForm::exponential);
  EXPECT_FALSE(c.discovery.prune);
  EXPECT_EQ(c.discovery.epsilon, 0.5);
  EXPECT_EQ(c.planner.gamma, 0.9);
  EXPECT_EQ(c.report.steps, (std::vector<std::size_t>{100, 200}));
  EXPECT_EQ(c.report.windows, (std::vector<std::size_t>{3}));
}

TEST(Config, EmptyTextGivesDefaults) {
  EXPECT_EQ(to_json(parse_config("")), to_json(RunConfig{}));
  EXPECT_EQ(to_json(parse_config("\n# nothing\n[run]\n")), to_json(RunConfig{}));
}

TEST(Config, RejectsUnknownAndMalformedEntries) {
  EXPECT_THROW(parse_config("[bogus]\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nseed\n"), ConfigError);
  EXPECT_THROW(parse_config("[run\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nseed = -3\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\ntask = boat\n"), ConfigError);
  EXPECT_THROW(parse_config("[env]\nbucket = [1, 2]\n"), ConfigError);
  EXPECT_THROW(parse_config("[discovery]\nprune = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[report]\nsteps = []\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nseed = \n"), ConfigError);
  try {
    parse_config("[run]\nseed = 1\n\nbogus = 2\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Config, EveryKeyIsSettableAndEchoed) {
  const auto keys = config_keys();
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  for (const char* k : {"run.seed", "env.layout_seed", "discovery.epsilon", "planner.gamma", "report.windows"})
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  const json echo = to_json(RunConfig{});
  for (const auto& k : keys) {
    const auto dot = k.find('.');
    const std::string section = k.substr(0, dot), key = k.substr(dot + 1);
    if (k == "run.out_dir") {
      EXPECT_FALSE(echo.at("run").contains("out_dir"));
      continue;
    }
    // Kernel and relaxation settings are echoed as nested objects.
    const std::string echoed = key.rfind("kernel_", 0) == 0 ? "kernel" : key.rfind("soft_", 0) == 0 ? "soft" : key;
    EXPECT_TRUE(echo.at(section).contains(echoed)) << k;
  }
  RunConfig c;
  EXPECT_THROW(set_config_value(c, "run.nope", "1"), ConfigError);
  set_config_value(c, "discovery.kernel_w", "2.5");
  EXPECT_EQ(c.discovery.kernel.w, 2.5);
}

TEST(Config, EchoCarriesRunSeedIntoDiscovery) {
  RunConfig c;
  c.seed = 17;
  c.discovery.seed = 3;
  EXPECT_EQ(to_json(c).at("discovery").at("seed"), 17);
}

TEST(Config, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(validate_run_config(c));
  c.planner.gamma = 1.0;
  EXPECT_THROW(validate_run_config(c), ConfigError);
  c = {};
  c.episodes = 0;
  EXPECT_THROW(validate_run_config(c), ConfigError);
  c = {};
  c.report.steps = {10};
  EXPECT_THROW(validate_run_config(c), ConfigError);
  c = {};
  c.painting.bucket = {9, 0, 0};
  EXPECT_THROW(validate_run_config(c), ConfigError);
}

TEST(Config, DerivedSeedsAreDistinctAndStable) {
  for (std::uint64_t s : {0ull, 1ull, 12345ull}) {
    EXPECT_NE(training_seed(s), test_seed(s));
    EXPECT_NE(training_seed(s), eval_seed(s));
    EXPECT_NE(test_seed(s), eval_seed(s));
    EXPECT_EQ(training_seed(s), training_seed(s));
  }
  EXPECT_NE(training_seed(1), training_seed(2));
}

TEST(EvalCsv, FormatsValuesAndMissingEntries) {
  EvalRow r;
  r.task = Task::tire;
  r.seed = 7;
  r.placement = 2;
  r.episodes = 10;
  r.mean_reward = 0.5;
  r.metrics.classes[0].recall = 1.0;
  r.metrics.classes[0].precision = 2.0 / 3.0;
  r.method = Method::markov;
  EXPECT_EQ(eval_csv_header(),
            "task,seed,placement,episodes,mean_reward,success_rate,recall0,precision0,recall1,precision1,method\n");
  EXPECT_EQ(eval_csv_row(r), "tire,7,2,10,0.500000,NA,1.000000,0.666667,NA,NA,markov\n");
}

TEST_F(TempDir, PrecedenceFileEnvSetFlag) {
  std::ofstream(path("run.toml")) << "[run]\nseed = 5\nepisodes = 3\n[env]\nhorizon = 10\n";
  auto seed_of = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"collect", "-c", path("run.toml"), "-o", path("d.jsonl")};
    args.insert(args.end(), extra.begin(), extra.end());
    const CliResult r = cli(args);
    EXPECT_EQ(r.code, 0) << r.err;
    const json cfg = json::parse(load_dataset(path("d.jsonl")).config);
    return cfg.at("run").at("seed").get<std::uint64_t>();
  };
  EXPECT_EQ(seed_of({}), 5u);
  ::setenv("CMRL_SEED", "6", 1);
  EXPECT_EQ(seed_of({}), 6u);
  EXPECT_EQ(seed_of({"--set", "run.seed=7"}), 7u);
  EXPECT_EQ(seed_of({"--set", "run.seed=7", "--seed", "8"}), 8u);
  ::unsetenv("CMRL_SEED");
  EXPECT_EQ(seed_of({"--seed", "9"}), 9u);
  const Dataset d = load_dataset(path("d.jsonl"));
  EXPECT_EQ(d.episodes.size(), 3u);
  EXPECT_EQ(d.horizon, 10u);
}

TEST_F(TempDir, ExitCodes) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"fly"}).code, 2);
  EXPECT_EQ(cli({"collect", "--episodes", "many"}).code, 2);
  EXPECT_EQ(cli({"collect", "--bogus"}).code, 2);
  EXPECT_EQ(cli({"plan", "--method", "magic", "--out-dir", path("")}).code, 2);
  EXPECT_EQ(cli({"collect", "--set", "run.nope=1", "--out-dir", path("")}).code, 2);
  EXPECT_EQ(cli({"collect", "--set", "run.seed", "--out-dir", path("")}).code, 2);
  EXPECT_EQ(cli({"collect", "-c", path("missing.toml")}).code, 2);
  EXPECT_EQ(cli({"collect", "--episodes", "0", "--out-dir", path("")}).code, 2);
  ::setenv("CMRL_SEED", "abc", 1);
  EXPECT_EQ(cli({"collect", "--out-dir", path("")}).code, 2);
  ::unsetenv("CMRL_SEED");

  const CliResult missing = cli({"discover", "--data", path("none.jsonl")});
  EXPECT_EQ(missing.code, 3);
  EXPECT_NE(missing.err.find("error:"), std::string::npos);
  std::ofstream(path("bad.jsonl")) << "{\"schema\": 1}\n";
  EXPECT_EQ(cli({"discover", "--data", path("bad.jsonl"), "--out-dir", path("")}).code, 3);

  ASSERT_EQ(cli({"collect", "--episodes", "200", "--out-dir", path("")}).code, 0);
  EXPECT_EQ(cli({"plan", "--method", "markov", "--out-dir", path(""), "--set", "planner.max_sweeps=2"}).code, 4);
  EXPECT_EQ(cli({"plan", "--method", "full", "--out-dir", path("")}).code, 3);  // no graph yet

  const CliResult help = cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("collect"), std::string::npos);
}

void pipeline(const fs::path& dir, const std::string& task) {
  const std::string d = dir.string();
  const std::vector<std::string> common{"--task", task, "--seed", "3", "--out-dir", d};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), common.begin(), common.end());
    const CliResult r = cli(a);
    ASSERT_EQ(r.code, 0) << a[0] << ": " << r.err;
  };
  with({"collect", "--episodes", "150"});
  with({"discover"});
  with({"plan", "--method", "full"});
  with({"eval", "--eval-episodes", "20", "--test-episodes", "30"});
}

TEST_F(TempDir, PipelineIsByteDeterministic) {
  pipeline(dir / "a", "painting");
  pipeline(dir / "b", "painting");
  for (const char* f : {"dataset.jsonl", "graph.json", "model.json", "policy.json", "metrics.csv"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "a" / "report.json"));
}

TEST_F(TempDir, ArtifactsEchoTheConfig) {
  pipeline(dir, "tire");
  const json graph = read_json(dir / "graph.json");
  EXPECT_EQ(graph.at("config").at("run").at("task"), "tire");
  EXPECT_EQ(graph.at("config").at("run").at("seed"), 3);
  EXPECT_TRUE(graph.contains("graph"));
  const json report = read_json(dir / "report.json");
  EXPECT_TRUE(report.at("report").contains("wall_clock_seconds"));
  EXPECT_TRUE(read_json(dir / "policy.json").contains("config"));
  EXPECT_EQ(json::parse(load_dataset(dir / "dataset.jsonl").config).at("run").at("seed"), 3);

  std::istringstream csv(slurp(dir / "metrics.csv"));
  std::string echo, header, row;
  std::getline(csv, echo);
  std::getline(csv, header);
  std::getline(csv, row);
  ASSERT_EQ(echo.rfind("# config: ", 0), 0u);
  EXPECT_EQ(json::parse(echo.substr(10)).at("run").at("task"), "tire");
  EXPECT_EQ(header + "\n", eval_csv_header());
  EXPECT_EQ(row.rfind("tire,3,0,20,", 0), 0u) << row;
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 10);
  EXPECT_EQ(row.substr(row.rfind(',') + 1), "full");
}

TEST_F(TempDir, BaselinesAndExternalTestSet) {
  const std::string d = path("");
  ASSERT_EQ(cli({"collect", "--episodes", "60", "--out-dir", d}).code, 0);
  ASSERT_EQ(cli({"collect", "--episodes", "20", "--seed", "9", "-o", path("test.jsonl")}).code, 0);
  for (const std::string m : {"markov", "stacking"}) {
    const CliResult p = cli({"plan", "--method", m, "--window", "1", "--out-dir", d});
    ASSERT_EQ(p.code, 0) << p.err;
    const CliResult e = cli({"eval", "--test", path("test.jsonl"), "--eval-episodes", "5", "--out-dir", d});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_NE(e.out.find("," + m + "\n"), std::string::npos) << e.out;
  }
}

TEST_F(TempDir, CustomTaskSkipsRollouts) {
  const std::string d = path("");
  ASSERT_EQ(cli({"collect", "--episodes", "40", "--out-dir", d}).code, 0);
  ASSERT_EQ(cli({"plan", "--method", "markov", "--out-dir", d}).code, 0);
  EXPECT_EQ(cli({"eval", "--task", "custom", "--out-dir", d}).code, 2);  // no simulator for a test set
  const CliResult e = cli({"eval", "--task", "custom", "--test", path("dataset.jsonl"), "--out-dir", d});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("custom,0,0,0,NA,NA,"), std::string::npos) << e.out;
}

TEST_F(TempDir, ReportWritesLearningCurve) {
  const CliResult r = cli({"report", "--steps", "500", "1000", "--eval-episodes", "10", "--out-dir", path(""),
                     "--set", "report.seeds=[1]", "--set", "report.placements=[0]", "--set",
                     "report.windows=[1]"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(dir / "learning_curve.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("# config: ", 0), 0u);
  std::getline(csv, line);
  EXPECT_EQ(line, "task,method,steps,episodes,runs,mean_reward,success_rate");
  std::vector<std::string> rows;
  while (std::getline(csv, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].rfind("painting,full,500,5,1,", 0), 0u);
  EXPECT_EQ(rows[1].rfind("painting,markov,500,5,1,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("painting,stacking-1,500,5,1,", 0), 0u);
  EXPECT_EQ(rows[5].rfind("painting,stacking-1,1000,10,1,", 0), 0u);
}

TEST(LearningCurve, AveragesOverRunsAndFloorsEpisodes) {
  RunConfig c;
  c.report.steps = {250};
  c.report.seeds = {1, 2};
  c.report.placements = {0, 1};
  c.report.windows = {2};
  c.eval_episodes = 5;
  const auto pts = learning_curve(c);
  ASSERT_EQ(pts.size(), 3u);
  for (const auto& p : pts) {
    EXPECT_EQ(p.episodes, 2u);
    EXPECT_EQ(p.steps, 200u);
    EXPECT_EQ(p.runs, 4u);
    EXPECT_GE(p.mean_reward, 0.0);
    EXPECT_GE(p.success_rate, 0.0);
    EXPECT_LE(p.success_rate, 1.0);
  }
  EXPECT_EQ(pts[2].method, "stacking-2");
}

}  // namespace
}  // namespace cmrl
