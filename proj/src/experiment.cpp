#include "cmrl/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "cmrl/error.hpp"
#include "cmrl/serialize.hpp"

namespace cmrl {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Drops a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

json parse_value(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  if (v.empty()) throw ConfigError(key + ": missing value");
  try {
    return json::parse(v);
  } catch (const json::parse_error&) {
  }
  for (char c : v) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
                    c == '/';
    if (!ok) throw ConfigError(key + ": cannot parse value '" + v + "'");
  }
  return v;
}

std::uint64_t as_uint(const std::string& key, const json& j) {
  if (!j.is_number_unsigned()) throw ConfigError(key + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

int as_int(const std::string& key, const json& j) {
  if (!j.is_number_integer()) throw ConfigError(key + ": expected an integer");
  return j.get<int>();
}

double as_double(const std::string& key, const json& j) {
  if (!j.is_number()) throw ConfigError(key + ": expected a number");
  return j.get<double>();
}

bool as_bool(const std::string& key, const json& j) {
  if (!j.is_boolean()) throw ConfigError(key + ": expected true or false");
  return j.get<bool>();
}

std::string as_string(const std::string& key, const json& j) {
  if (!j.is_string()) throw ConfigError(key + ": expected a string");
  return j.get<std::string>();
}

std::array<int, 3> as_triple(const std::string& key, const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(key + ": expected [x, y, z]");
  return {as_int(key, j[0]), as_int(key, j[1]), as_int(key, j[2])};
}

template <typename T, typename F>
std::vector<T> as_list(const std::string& key, const json& j, F&& one) {
  if (!j.is_array() || j.empty()) throw ConfigError(key + ": expected a non-empty list");
  std::vector<T> out;
  for (const auto& e : j) out.push_back(static_cast<T>(one(key, e)));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.task", [](RunConfig& c, const auto& k, const json& v) { c.task = task_from_string(as_string(k, v)); }},
      {"run.seed", [](RunConfig& c, const auto& k, const json& v) { c.seed = as_uint(k, v); }},
      {"run.placement", [](RunConfig& c, const auto& k, const json& v) { c.placement = as_int(k, v); }},
      {"run.out_dir", [](RunConfig& c, const auto& k, const json& v) { c.out_dir = as_string(k, v); }},
      {"run.episodes", [](RunConfig& c, const auto& k, const json& v) { c.episodes = as_uint(k, v); }},
      {"run.test_episodes", [](RunConfig& c, const auto& k, const json& v) { c.test_episodes = as_uint(k, v); }},
      {"run.eval_episodes", [](RunConfig& c, const auto& k, const json& v) { c.eval_episodes = as_uint(k, v); }},
      {"run.method", [](RunConfig& c, const auto& k, const json& v) { c.method = method_from_string(as_string(k, v)); }},
      {"run.window", [](RunConfig& c, const auto& k, const json& v) { c.window = as_uint(k, v); }},

      {"env.layout_seed", [](RunConfig& c, const auto& k, const json& v) { c.layout_seed = as_uint(k, v); }},
      {"env.horizon",
       [](RunConfig& c, const auto& k, const json& v) { c.painting.horizon = c.tire.horizon = as_uint(k, v); }},
      {"env.painting_grid", [](RunConfig& c, const auto& k, const json& v) { c.painting.grid = as_triple(k, v); }},
      {"env.bucket", [](RunConfig& c, const auto& k, const json& v) { c.painting.bucket = as_triple(k, v); }},
      {"env.canvas", [](RunConfig& c, const auto& k, const json& v) { c.painting.canvas = as_triple(k, v); }},
      {"env.tire_grid", [](RunConfig& c, const auto& k, const json& v) { c.tire.grid = as_triple(k, v); }},
      {"env.lugs",
       [](RunConfig& c, const auto& k, const json& v) {
         if (!v.is_array() || v.size() != 4) throw ConfigError(k + ": expected four cells");
         for (std::size_t i = 0; i < 4; ++i) c.tire.lugs[i] = as_triple(k, v[i]);
       }},
      {"env.center", [](RunConfig& c, const auto& k, const json& v) { c.tire.center = as_triple(k, v); }},
      {"env.terminal_on_success",
       [](RunConfig& c, const auto& k, const json& v) { c.tire.terminal_on_success = as_bool(k, v); }},

      {"discovery.epsilon", [](RunConfig& c, const auto& k, const json& v) { c.discovery.epsilon = as_double(k, v); }},
      {"discovery.max_var", [](RunConfig& c, const auto& k, const json& v) { c.discovery.max_var = as_uint(k, v); }},
      {"discovery.restarts", [](RunConfig& c, const auto& k, const json& v) { c.discovery.restarts = as_uint(k, v); }},
      {"discovery.eps_grad_center",
       [](RunConfig& c, const auto& k, const json& v) { c.discovery.eps_grad_center = as_double(k, v); }},
      {"discovery.eps_grad_radius",
       [](RunConfig& c, const auto& k, const json& v) { c.discovery.eps_grad_radius = as_double(k, v); }},
      {"discovery.step_center",
       [](RunConfig& c, const auto& k, const json& v) { c.discovery.step_center = as_double(k, v); }},
      {"discovery.step_radius",
       [](RunConfig& c, const auto& k, const json& v) { c.discovery.step_radius = as_double(k, v); }},
      {"discovery.max_grad_iters",
       [](RunConfig& c, const auto& k, const json& v) { c.discovery.max_grad_iters = as_uint(k, v); }},
      {"discovery.min_gain", [](RunConfig& c, const auto& k, const json& v) { c.discovery.min_gain = as_double(k, v); }},
      {"discovery.r_min", [](RunConfig& c, const auto& k, const json& v) { c.discovery.r_min = as_double(k, v); }},
      {"discovery.prune", [](RunConfig& c, const auto& k, const json& v) { c.discovery.prune = as_bool(k, v); }},
      {"discovery.kernel_w", [](RunConfig& c, const auto& k, const json& v) { c.discovery.kernel.w = as_double(k, v); }},
      {"discovery.kernel_alpha",
       [](RunConfig& c, const auto& k, const json& v) { c.discovery.kernel.alpha = as_double(k, v); }},
      {"discovery.soft_w_e", [](RunConfig& c, const auto& k, const json& v) { c.discovery.soft.w_e = as_double(k, v); }},
      {"discovery.soft_form",
       [](RunConfig& c, const auto& k, const json& v) {
         const std::string f = as_string(k, v);
         if (f == "logistic") c.discovery.soft.form = RelaxationForm::logistic;
         else if (f == "exponential") c.discovery.soft.form = RelaxationForm::exponential;
         else throw ConfigError(k + ": expected logistic or exponential");
       }},

      {"planner.gamma", [](RunConfig& c, const auto& k, const json& v) { c.planner.gamma = as_double(k, v); }},
      {"planner.tolerance", [](RunConfig& c, const auto& k, const json& v) { c.planner.tolerance = as_double(k, v); }},
      {"planner.max_sweeps", [](RunConfig& c, const auto& k, const json& v) { c.planner.max_sweeps = as_uint(k, v); }},

      {"report.steps",
       [](RunConfig& c, const auto& k, const json& v) { c.report.steps = as_list<std::size_t>(k, v, as_uint); }},
      {"report.seeds",
       [](RunConfig& c, const auto& k, const json& v) { c.report.seeds = as_list<std::uint64_t>(k, v, as_uint); }},
      {"report.placements",
       [](RunConfig& c, const auto& k, const json& v) { c.report.placements = as_list<int>(k, v, as_int); }},
      {"report.windows",
       [](RunConfig& c, const auto& k, const json& v) { c.report.windows = as_list<std::size_t>(k, v, as_uint); }},
  };
  return table;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_optional(const std::optional<double>& v) { return v ? fmt_double(*v) : "NA"; }

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::painting: return "painting";
    case Task::tire: return "tire";
    case Task::custom: return "custom";
  }
  return "painting";
}

Task task_from_string(const std::string& s) {
  if (s == "painting") return Task::painting;
  if (s == "tire") return Task::tire;
  if (s == "custom") return Task::custom;
  throw ConfigError("unknown task '" + s + "'");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

void set_config_value(RunConfig& cfg, const std::string& dotted_key, const std::string& value) {
  const auto it = setters().find(dotted_key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + dotted_key + "'");
  it->second(cfg, dotted_key, parse_value(dotted_key, value));
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> known{"run", "env", "discovery", "planner", "report"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    try {
      set_config_value(base, section + "." + key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

json to_json(const RunConfig& c) {
  auto cell = [](const Cell& x) { return json::array({x[0], x[1], x[2]}); };
  json lugs = json::array();
  for (const auto& l : c.tire.lugs) lugs.push_back(cell(l));
  return {{"run",
           {{"task", to_string(c.task)},
            {"seed", c.seed},
            {"placement", c.placement},
            {"episodes", c.episodes},
            {"test_episodes", c.test_episodes},
            {"eval_episodes", c.eval_episodes},
            {"method", to_string(c.method)},
            {"window", c.window}}},
          {"env",
           {{"layout_seed", c.layout_seed},
            {"horizon", c.painting.horizon},
            {"painting_grid", cell(c.painting.grid)},
            {"bucket", cell(c.painting.bucket)},
            {"canvas", cell(c.painting.canvas)},
            {"tire_grid", cell(c.tire.grid)},
            {"lugs", lugs},
            {"center", cell(c.tire.center)},
            {"terminal_on_success", c.tire.terminal_on_success}}},
          {"discovery", [&] {
             DiscoveryConfig d = c.discovery;
             d.seed = c.seed;  // discovery always runs with the run seed
             return to_json(d);
           }()},
          {"planner", to_json(c.planner)},
          {"report",
           {{"steps", c.report.steps},
            {"seeds", c.report.seeds},
            {"placements", c.report.placements},
            {"windows", c.report.windows}}}};
}

void validate_run_config(const RunConfig& c) {
  if (c.episodes < 1) throw ConfigError("run.episodes must be at least 1");
  if (c.test_episodes < 1) throw ConfigError("run.test_episodes must be at least 1");
  if (c.eval_episodes < 1) throw ConfigError("run.eval_episodes must be at least 1");
  if (c.placement < 0) throw ConfigError("run.placement must be non-negative");
  if (c.painting.horizon < 1) throw ConfigError("env.horizon must be at least 1");
  if (!(c.planner.gamma > 0.0 && c.planner.gamma < 1.0)) throw ConfigError("planner.gamma must be in (0, 1)");
  if (!(c.planner.tolerance > 0.0)) throw ConfigError("planner.tolerance must be positive");
  if (c.planner.max_sweeps < 1) throw ConfigError("planner.max_sweeps must be at least 1");
  for (int p : c.report.placements)
    if (p < 0) throw ConfigError("report.placements must be non-negative");
  for (std::size_t s : c.report.steps)
    if (s < c.painting.horizon) throw ConfigError("report.steps must be at least one episode");
  if (c.task != Task::custom) {
    validate_config(c.painting);
    validate_config(c.tire);
  }
}

LatchEnv make_env(const RunConfig& cfg, int placement) {
  switch (cfg.task) {
    case Task::painting: return LatchEnv(painting_placement(placement, cfg.layout_seed, cfg.painting));
    case Task::tire: return LatchEnv(tire_placement(placement, cfg.layout_seed, cfg.tire));
    case Task::custom: break;
  }
  throw ConfigError("the custom task has no simulator; supply datasets instead");
}

std::uint64_t training_seed(std::uint64_t seed) { return mix(seed, 0x7a41); }
std::uint64_t test_seed(std::uint64_t seed) { return mix(seed, 0x7e57); }
std::uint64_t eval_seed(std::uint64_t seed) { return mix(seed, 0xe7a1); }

std::string eval_csv_header() {
  return "task,seed,placement,episodes,mean_reward,success_rate,recall0,precision0,recall1,"
         "precision1,method\n";
}

std::string eval_csv_row(const EvalRow& r) {
  std::string out = to_string(r.task) + "," + std::to_string(r.seed) + "," + std::to_string(r.placement) +
                    "," + std::to_string(r.episodes) + "," + fmt_optional(r.mean_reward) + "," +
                    fmt_optional(r.success_rate);
  for (const auto& c : r.metrics.classes) out += "," + fmt_optional(c.recall) + "," + fmt_optional(c.precision);
  return out + "," + to_string(r.method) + "\n";
}

LearnedAgent train(const Dataset& d, Method method, std::size_t window, const RunConfig& cfg,
                   std::uint64_t seed, DiscoveryResult* discovery) {
  switch (method) {
    case Method::full: {
      DiscoveryConfig dc = cfg.discovery;
      dc.seed = seed;
      DiscoveryResult r = discover(d, dc);
      LearnedAgent agent = LearnedAgent::memory(d, r.graph.units, cfg.planner);
      if (discovery) *discovery = std::move(r);
      return agent;
    }
    case Method::markov: return LearnedAgent::memory(d, {}, cfg.planner);
    case Method::stacking: return LearnedAgent::stacking(d, window, cfg.planner);
  }
  throw ConfigError("unknown method");
}

std::vector<CurvePoint> learning_curve(const RunConfig& cfg) {
  validate_run_config(cfg);
  const std::size_t h = cfg.task == Task::tire ? cfg.tire.horizon : cfg.painting.horizon;
  std::vector<std::string> methods{"full", "markov"};
  for (std::size_t w : cfg.report.windows) methods.push_back("stacking-" + std::to_string(w));

  std::vector<CurvePoint> out;
  for (std::size_t steps : cfg.report.steps) {
    const std::size_t episodes = steps / h;
    std::map<std::string, CurvePoint> acc;
    for (const auto& m : methods) acc[m] = {cfg.task, m, episodes * h, episodes, 0, 0.0, 0.0};
    for (std::uint64_t seed : cfg.report.seeds) {
      for (int placement : cfg.report.placements) {
        const LatchEnv env = make_env(cfg, placement);
        // Smaller training sets are prefixes of larger ones for the same seed.
        const Dataset d = collect_random(env, episodes, training_seed(seed));
        auto add = [&](const std::string& name, const LearnedAgent& agent) {
          const auto e = agent.evaluate(env, cfg.eval_episodes, eval_seed(seed));
          auto& p = acc[name];
          ++p.runs;
          p.mean_reward += e.mean_reward;
          p.success_rate += e.success_rate;
        };
        add("full", train(d, Method::full, 0, cfg, seed));
        add("markov", train(d, Method::markov, 0, cfg, seed));
        for (std::size_t w : cfg.report.windows)
          add("stacking-" + std::to_string(w), train(d, Method::stacking, w, cfg, seed));
      }
    }
    for (const auto& m : methods) {
      CurvePoint p = acc[m];
      p.mean_reward /= static_cast<double>(p.runs);
      p.success_rate /= static_cast<double>(p.runs);
      out.push_back(p);
    }
  }
  return out;
}

std::string curve_csv(const std::vector<CurvePoint>& points) {
  std::string out = "task,method,steps,episodes,runs,mean_reward,success_rate\n";
  for (const auto& p : points)
    out += to_string(p.task) + "," + p.method + "," + std::to_string(p.steps) + "," +
           std::to_string(p.episodes) + "," + std::to_string(p.runs) + "," + fmt_double(p.mean_reward) + "," +
           fmt_double(p.success_rate) + "\n";
  return out;
}

}  // namespace cmrl
