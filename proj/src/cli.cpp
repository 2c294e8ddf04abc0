#include "cmrl/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cmrl/error.hpp"
#include "cmrl/experiment.hpp"
#include "cmrl/serialize.hpp"

namespace cmrl {

namespace {

namespace fs = std::filesystem;

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::numeric: return 4;
  }
  return 1;
}

// Options shared by every subcommand.
struct Common {
  std::optional<std::string> config;
  std::optional<std::string> task;
  std::optional<std::uint64_t> seed;
  std::optional<int> placement;
  std::optional<std::string> out_dir;
  std::vector<std::string> sets;

  void attach(CLI::App* sub) {
    sub->add_option("-c,--config", config, "TOML-style config file");
    sub->add_option("--task", task, "painting, tire or custom");
    sub->add_option("--seed", seed, "master seed (overrides CMRL_SEED)");
    sub->add_option("--placement", placement, "special-cell placement index");
    sub->add_option("--out-dir", out_dir, "directory for default output paths");
    sub->add_option("--set", sets, "override any config value: section.key=value");
  }

  // defaults < file < CMRL_SEED < --set < dedicated flags
  RunConfig resolve() const {
    RunConfig cfg;
    if (config) cfg = load_config(*config);
    if (const char* env = std::getenv("CMRL_SEED")) set_config_value(cfg, "run.seed", env);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
      set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (task) cfg.task = task_from_string(*task);
    if (seed) cfg.seed = *seed;
    if (placement) cfg.placement = *placement;
    if (out_dir) cfg.out_dir = *out_dir;
    return cfg;
  }
};

fs::path or_default(const std::optional<std::string>& p, const RunConfig& cfg, const char* name) {
  return p ? fs::path(*p) : cfg.out_dir / name;
}

void ensure_parent(const fs::path& p) {
  const fs::path dir = p.parent_path();
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

json document(const RunConfig& cfg, const char* key, json body) {
  return {{"config", to_json(cfg)}, {key, std::move(body)}};
}

std::string csv_echo(const RunConfig& cfg) { return "# config: " + to_json(cfg).dump() + "\n"; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal memory discovery for model-based RL on latch gridworlds", "cmrl"};
  app.require_subcommand(1);

  Common common;
  std::optional<std::size_t> episodes, eval_episodes, test_episodes, window;
  std::optional<std::string> data, graph, report, model, policy, metrics, test, output, method;
  std::vector<std::size_t> steps;

  auto* collect = app.add_subcommand("collect", "record random-policy episodes to a dataset file");
  common.attach(collect);
  collect->add_option("--episodes", episodes, "number of episodes L");
  collect->add_option("-o,--out", output, "dataset path (default <out-dir>/dataset.jsonl)");

  auto* disc = app.add_subcommand("discover", "learn memory units and the causal graph");
  common.attach(disc);
  disc->add_option("--data", data, "dataset path (default <out-dir>/dataset.jsonl)");
  disc->add_option("--graph", graph, "graph output (default <out-dir>/graph.json)");
  disc->add_option("--report", report, "report output (default <out-dir>/report.json)");

  auto* plan = app.add_subcommand("plan", "fit a tabular model and solve it by value iteration");
  common.attach(plan);
  plan->add_option("--data", data, "dataset path (default <out-dir>/dataset.jsonl)");
  plan->add_option("--graph", graph, "graph from discover (default <out-dir>/graph.json)");
  plan->add_option("--method", method, "full, markov or stacking");
  plan->add_option("--window", window, "history length for stacking");
  plan->add_option("--model", model, "model output (default <out-dir>/model.json)");
  plan->add_option("--policy", policy, "policy output (default <out-dir>/policy.json)");

  auto* eval = app.add_subcommand("eval", "roll out a policy and score reward prediction");
  common.attach(eval);
  eval->add_option("--model", model, "model file (default <out-dir>/model.json)");
  eval->add_option("--policy", policy, "policy file (default <out-dir>/policy.json)");
  eval->add_option("--test", test, "test dataset; collected from the simulator when absent");
  eval->add_option("--eval-episodes", eval_episodes, "policy roll-outs");
  eval->add_option("--test-episodes", test_episodes, "episodes in the collected test dataset");
  eval->add_option("--metrics", metrics, "CSV output (default <out-dir>/metrics.csv)");

  auto* rep = app.add_subcommand("report", "learning curve over training sizes, seeds and placements");
  common.attach(rep);
  rep->add_option("--steps", steps, "training sizes in time-steps");
  rep->add_option("--eval-episodes", eval_episodes, "policy roll-outs per run");
  rep->add_option("-o,--out", output, "CSV output (default <out-dir>/learning_curve.csv)");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig cfg = common.resolve();
    if (episodes) cfg.episodes = *episodes;
    if (eval_episodes) cfg.eval_episodes = *eval_episodes;
    if (test_episodes) cfg.test_episodes = *test_episodes;
    if (window) cfg.window = *window;
    if (method) cfg.method = method_from_string(*method);
    if (!steps.empty()) cfg.report.steps = steps;
    validate_run_config(cfg);

    if (collect->parsed()) {
      const LatchEnv env = make_env(cfg, cfg.placement);
      Dataset d = collect_random(env, cfg.episodes, training_seed(cfg.seed));
      d.config = to_json(cfg).dump();
      const fs::path path = or_default(output, cfg, "dataset.jsonl");
      ensure_parent(path);
      save_dataset(d, path);
      out << "wrote " << path.string() << " (L=" << d.episodes.size() << ", h=" << d.horizon << ")\n";
    } else if (disc->parsed()) {
      const Dataset d = load_dataset(or_default(data, cfg, "dataset.jsonl"));
      DiscoveryConfig dc = cfg.discovery;
      dc.seed = cfg.seed;
      const DiscoveryResult r = discover(d, dc);
      const fs::path gpath = or_default(graph, cfg, "graph.json");
      const fs::path rpath = or_default(report, cfg, "report.json");
      ensure_parent(gpath);
      ensure_parent(rpath);
      write_json(gpath, document(cfg, "graph", to_json(r.graph)));
      write_json(rpath, document(cfg, "report", to_json(r.report)));
      out << "discovered " << r.graph.units.size() << " memory unit(s); wrote " << gpath.string() << "\n";
    } else if (plan->parsed()) {
      const Dataset d = load_dataset(or_default(data, cfg, "dataset.jsonl"));
      std::optional<LearnedAgent> agent;
      switch (cfg.method) {
        case Method::full: {
          const json g = read_json(or_default(graph, cfg, "graph.json"));
          if (!g.contains("graph")) throw ParseError("graph file has no \"graph\" entry");
          agent = LearnedAgent::memory(d, graph_from_json(g.at("graph")).units, cfg.planner);
          break;
        }
        case Method::markov: agent = LearnedAgent::memory(d, {}, cfg.planner); break;
        case Method::stacking: agent = LearnedAgent::stacking(d, cfg.window, cfg.planner); break;
      }
      const fs::path mpath = or_default(model, cfg, "model.json");
      const fs::path ppath = or_default(policy, cfg, "policy.json");
      ensure_parent(mpath);
      ensure_parent(ppath);
      write_json(mpath, document(cfg, "agent", agent_model_json(*agent)));
      write_json(ppath, document(cfg, "agent", agent_policy_json(*agent)));
      out << "planned " << agent->model().states << " states in " << agent->plan().values.sweeps
          << " sweeps; wrote " << ppath.string() << "\n";
    } else if (eval->parsed()) {
      const json m = read_json(or_default(model, cfg, "model.json"));
      const json p = read_json(or_default(policy, cfg, "policy.json"));
      if (!m.contains("agent") || !p.contains("agent")) throw ParseError("model or policy file has no \"agent\" entry");
      const LearnedAgent agent = agent_from_json(m.at("agent"), p.at("agent"));
      EvalRow row;
      row.task = cfg.task;
      row.seed = cfg.seed;
      row.placement = cfg.placement;
      row.method = cfg.method;
      if (p.contains("config")) row.method = method_from_string(p.at("config").at("run").at("method").get<std::string>());
      Dataset test_set;
      if (test) {
        test_set = load_dataset(*test);
      } else {
        test_set = collect_random(make_env(cfg, cfg.placement), cfg.test_episodes, test_seed(cfg.seed));
      }
      if (cfg.task != Task::custom) {
        const auto e = agent.evaluate(make_env(cfg, cfg.placement), cfg.eval_episodes, eval_seed(cfg.seed));
        row.episodes = e.episodes;
        row.mean_reward = e.mean_reward;
        row.success_rate = e.success_rate;
      }
      row.metrics = agent.score(test_set);
      const fs::path path = or_default(metrics, cfg, "metrics.csv");
      ensure_parent(path);
      write_text(path, csv_echo(cfg) + eval_csv_header() + eval_csv_row(row));
      out << eval_csv_header() << eval_csv_row(row);
    } else if (rep->parsed()) {
      const auto points = learning_curve(cfg);
      const fs::path path = or_default(output, cfg, "learning_curve.csv");
      ensure_parent(path);
      write_text(path, csv_echo(cfg) + curve_csv(points));
      out << curve_csv(points);
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace cmrl
