#include "cmrl/serialize.hpp"

#include <fstream>
#include <sstream>

#include "cmrl/error.hpp"

namespace cmrl {

namespace {

const char* form_name(RelaxationForm f) {
  return f == RelaxationForm::logistic ? "logistic" : "exponential";
}

RelaxationForm form_from_name(const std::string& s) {
  if (s == "logistic") return RelaxationForm::logistic;
  if (s == "exponential") return RelaxationForm::exponential;
  throw ConfigError("unknown relaxation form '" + s + "'");
}

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::attribute: return "attribute";
    case NodeKind::action: return "action";
    case NodeKind::memory: return "memory";
  }
  return "attribute";
}

NodeKind node_kind_from_name(const std::string& s) {
  if (s == "attribute") return NodeKind::attribute;
  if (s == "action") return NodeKind::action;
  if (s == "memory") return NodeKind::memory;
  throw ParseError("unknown node kind '" + s + "'");
}

json node_json(const Node& n) { return {{"kind", node_kind_name(n.kind)}, {"index", n.index}}; }

Node node_from_json(const json& j) {
  return {node_kind_from_name(j.at("kind").get<std::string>()), j.at("index").get<std::size_t>()};
}

json grid_json(const GridSpec& g) { return g.edges; }

// Wraps nlohmann exceptions so callers only see the library's error types.
template <typename F>
auto parsing(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json to_json(const AttributeSchema& s) {
  json attrs = json::array();
  for (const auto& a : s.attributes)
    attrs.push_back({{"name", a.name},
                     {"dim", a.dim},
                     {"lower", a.lower},
                     {"upper", a.upper},
                     {"kind", kind_name(a.kind)}});
  return {{"attributes", attrs}, {"action_count", s.action_count}, {"reward_attr", s.reward_attr}};
}

AttributeSchema schema_from_json(const json& j) {
  return parsing("schema", [&] {
    AttributeSchema s;
    for (const auto& a : j.at("attributes")) {
      AttributeSpec spec;
      spec.name = a.at("name").get<std::string>();
      spec.dim = a.at("dim").get<std::size_t>();
      spec.lower = a.at("lower").get<std::vector<double>>();
      spec.upper = a.at("upper").get<std::vector<double>>();
      spec.kind = kind_from_name(a.at("kind").get<std::string>());
      s.attributes.push_back(std::move(spec));
    }
    s.action_count = j.at("action_count").get<int>();
    s.reward_attr = j.at("reward_attr").get<std::size_t>();
    validate_schema(s);
    return s;
  });
}

json to_json(const DiscoveryConfig& c) {
  json j = {{"epsilon", c.epsilon},
            {"max_var", c.max_var},
            {"restarts", c.restarts},
            {"eps_grad_center", c.eps_grad_center},
            {"eps_grad_radius", c.eps_grad_radius},
            {"step_center", c.step_center},
            {"step_radius", c.step_radius},
            {"max_grad_iters", c.max_grad_iters},
            {"min_gain", c.min_gain},
            {"r_min", c.r_min},
            {"prune", c.prune},
            {"kernel", {{"w", c.kernel.w}, {"alpha", c.kernel.alpha}}},
            {"soft", {{"w_e", c.soft.w_e}, {"form", form_name(c.soft.form)}}},
            {"seed", c.seed}};
  j["grid"] = c.grid ? grid_json(*c.grid) : json(nullptr);
  return j;
}

DiscoveryConfig discovery_config_from_json(const json& j) {
  return parsing("discovery config", [&] {
    DiscoveryConfig c;
    c.epsilon = j.at("epsilon").get<double>();
    c.max_var = j.at("max_var").get<std::size_t>();
    c.restarts = j.at("restarts").get<std::size_t>();
    c.eps_grad_center = j.at("eps_grad_center").get<double>();
    c.eps_grad_radius = j.at("eps_grad_radius").get<double>();
    c.step_center = j.at("step_center").get<double>();
    c.step_radius = j.at("step_radius").get<double>();
    c.max_grad_iters = j.at("max_grad_iters").get<std::size_t>();
    c.min_gain = j.at("min_gain").get<double>();
    c.r_min = j.at("r_min").get<double>();
    c.prune = j.at("prune").get<bool>();
    c.kernel.w = j.at("kernel").at("w").get<double>();
    c.kernel.alpha = j.at("kernel").at("alpha").get<double>();
    c.soft.w_e = j.at("soft").at("w_e").get<double>();
    c.soft.form = form_from_name(j.at("soft").at("form").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("grid").is_null())
      c.grid = GridSpec{j.at("grid").get<std::vector<std::vector<std::vector<double>>>>()};
    return c;
  });
}

json to_json(const PlannerConfig& c) {
  return {{"gamma", c.gamma}, {"tolerance", c.tolerance}, {"max_sweeps", c.max_sweeps}};
}

PlannerConfig planner_config_from_json(const json& j) {
  return parsing("planner config", [&] {
    PlannerConfig c;
    c.gamma = j.at("gamma").get<double>();
    c.tolerance = j.at("tolerance").get<double>();
    c.max_sweeps = j.at("max_sweeps").get<std::size_t>();
    return c;
  });
}

json to_json(const MemoryUnit& u) {
  return {{"id", u.id},
          {"attr", u.event.attr},
          {"center", u.event.center},
          {"radius", u.event.radius}};
}

MemoryUnit memory_unit_from_json(const json& j) {
  return parsing("memory unit", [&] {
    MemoryUnit u;
    u.id = j.at("id").get<std::size_t>();
    u.event.attr = j.at("attr").get<std::size_t>();
    u.event.center = j.at("center").get<std::vector<double>>();
    u.event.radius = j.at("radius").get<double>();
    return u;
  });
}

json to_json(const CausalGraph& g) {
  json parents = json::array();
  for (const auto& [child, pa] : g.parents) {
    json list = json::array();
    for (const auto& p : pa) list.push_back(node_json(p));
    parents.push_back({{"child", node_json(child)}, {"parents", list}});
  }
  json units = json::array();
  for (const auto& u : g.units) units.push_back(to_json(u));
  return {{"parents", parents}, {"units", units}};
}

CausalGraph graph_from_json(const json& j) {
  return parsing("graph", [&] {
    CausalGraph g;
    for (const auto& e : j.at("parents")) {
      std::vector<Node> pa;
      for (const auto& p : e.at("parents")) pa.push_back(node_from_json(p));
      g.parents[node_from_json(e.at("child"))] = std::move(pa);
    }
    for (const auto& u : j.at("units")) g.units.push_back(memory_unit_from_json(u));
    return g;
  });
}

json to_json(const DiscoveryReport& r) {
  json entropies = json::array();
  for (const auto& [attr, e] : r.entropies)
    entropies.push_back({{"attr", attr}, {"initial", e.initial}, {"final", e.final}});
  auto records = [](const std::vector<UnitRecord>& v) {
    json out = json::array();
    for (const auto& u : v)
      out.push_back({{"attr", u.attr},
                     {"center", u.center},
                     {"radius", u.radius},
                     {"gain", u.gain},
                     {"iterations", u.iterations},
                     {"target", u.target}});
    return out;
  };
  return {{"wall_clock_seconds", r.wall_clock_seconds},
          {"entropies", entropies},
          {"units", records(r.units)},
          {"pruned", records(r.pruned)},
          {"config", to_json(r.config)}};
}

json to_json(const TabularModel& m) {
  json pairs = json::array();
  for (std::size_t s = 0; s < m.states; ++s) {
    for (std::size_t a = 0; a < m.actions; ++a) {
      const std::size_t p = m.pair(s, a);
      if (m.visits[p] == 0) continue;
      json next = json::array();
      for (const auto& o : m.transition[p]) next.push_back({o.next, o.prob});
      json reward = json::array();
      for (const auto& r : m.reward[p]) reward.push_back({r.value, r.prob});
      pairs.push_back({{"s", s}, {"a", a}, {"visits", m.visits[p]}, {"next", next}, {"reward", reward}});
    }
  }
  json terminal = json::array();
  for (std::size_t s = 0; s < m.states; ++s)
    if (m.terminal[s]) terminal.push_back(s);
  return {{"states", m.states}, {"actions", m.actions}, {"pairs", pairs}, {"terminal", terminal}};
}

TabularModel model_from_json(const json& j) {
  TabularModel m = parsing("model", [&] {
    // Start from an empty builder so unvisited pairs get the usual self-loops.
    TabularModel out = ModelBuilder(j.at("states").get<std::size_t>(),
                                    j.at("actions").get<std::size_t>()).build();
    for (const auto& e : j.at("pairs")) {
      const std::size_t s = e.at("s").get<std::size_t>();
      const std::size_t a = e.at("a").get<std::size_t>();
      if (s >= out.states || a >= out.actions) throw IndexError("model pair out of range");
      const std::size_t p = out.pair(s, a);
      out.visits[p] = e.at("visits").get<std::uint64_t>();
      out.transition[p].clear();
      for (const auto& o : e.at("next"))
        out.transition[p].push_back({o.at(0).get<std::size_t>(), o.at(1).get<double>()});
      out.reward[p].clear();
      for (const auto& r : e.at("reward"))
        out.reward[p].push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    }
    for (const auto& s : j.at("terminal")) {
      const auto id = s.get<std::size_t>();
      if (id >= out.states) throw IndexError("terminal state out of range");
      out.terminal[id] = 1;
    }
    return out;
  });
  validate_model(m);
  return m;
}

json to_json(const PolicyTable& p) { return {{"action", p.action}}; }

PolicyTable policy_from_json(const json& j) {
  return parsing("policy", [&] { return PolicyTable{j.at("action").get<std::vector<int>>()}; });
}

namespace {

json state_json(const LearnedAgent& a) {
  json units = json::array();
  for (const auto& u : a.units()) units.push_back(to_json(u));
  json j = {{"schema", to_json(a.schema())},
            {"kind", a.stacked() ? "stacking" : "memory"},
            {"units", units}};
  if (a.stacked()) {
    j["window"] = a.window();
    j["keys"] = a.history()->keys();
  }
  return j;
}

}  // namespace

json agent_model_json(const LearnedAgent& a) {
  return {{"state", state_json(a)}, {"model", to_json(a.model())}};
}

json agent_policy_json(const LearnedAgent& a) {
  const ValueTable& v = a.plan().values;
  return {{"state", state_json(a)},
          {"policy", to_json(a.plan().policy)},
          {"values", {{"gamma", v.gamma}, {"residual", v.residual}, {"sweeps", v.sweeps}, {"v", v.values}}}};
}

LearnedAgent agent_from_json(const json& model, const json& policy) {
  return parsing("agent", [&] {
    const json& st = model.at("state");
    if (st != policy.at("state")) throw DimensionMismatch("model and policy describe different states");
    const AttributeSchema schema = schema_from_json(st.at("schema"));
    std::vector<MemoryUnit> units;
    for (const auto& u : st.at("units")) units.push_back(memory_unit_from_json(u));
    const std::string kind = st.at("kind").get<std::string>();
    if (kind != "memory" && kind != "stacking") throw ParseError("unknown state kind '" + kind + "'");
    const bool stacked = kind == "stacking";
    std::size_t window = 0;
    std::vector<HistoryStateIndex::Key> keys;
    if (stacked) {
      window = st.at("window").get<std::size_t>();
      keys = st.at("keys").get<std::vector<HistoryStateIndex::Key>>();
    }
    PlanResult plan;
    plan.policy = policy_from_json(policy.at("policy"));
    const json& v = policy.at("values");
    plan.values.gamma = v.at("gamma").get<double>();
    plan.values.residual = v.at("residual").get<double>();
    plan.values.sweeps = v.at("sweeps").get<std::size_t>();
    plan.values.values = v.at("v").get<std::vector<double>>();
    return LearnedAgent::restore(schema, std::move(units), stacked, window, keys,
                                 model_from_json(model.at("model")), std::move(plan));
  });
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, dump(j)); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace cmrl
