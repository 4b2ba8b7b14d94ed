#include "rcis/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rcis/errors.hpp"

namespace rcis::cli {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = at(key);
    try {
      out = v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(key_path(key) + ": wrong type (got " + std::string(v.type_name()) + ")");
    }
  }

  void read_number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(key_path(key) + ": expected a number");
    out = v.get<double>();
  }

  void read_count(const std::string& key, std::size_t& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_unsigned())
      throw ConfigError(key_path(key) + ": expected a nonnegative integer");
    out = v.get<std::size_t>();
  }

  void read_vec(const std::string& key, Vec& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(key_path(key) + ": expected an array of numbers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(key_path(key) + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + key_path(item.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<Monomial> read_terms(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of terms");
  std::vector<Monomial> terms;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Section s(j[i], path + "[" + std::to_string(i) + "]");
    Monomial m;
    s.read_number("coefficient", m.coefficient);
    s.read("exponents", m.exponents);
    s.finish();
    terms.push_back(std::move(m));
  }
  return terms;
}

std::vector<std::vector<Monomial>> read_map(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of outputs");
  std::vector<std::vector<Monomial>> outputs;
  for (std::size_t i = 0; i < j.size(); ++i)
    outputs.push_back(read_terms(j[i], path + "[" + std::to_string(i) + "]"));
  return outputs;
}

Box read_box(Section& parent, const std::string& key) {
  if (!parent.has(key)) throw ConfigError("missing key '" + parent.key_path(key) + "'");
  Section s(parent.at(key), parent.key_path(key));
  Vec lo, hi;
  s.read_vec("lower", lo);
  s.read_vec("upper", hi);
  s.finish();
  return Box(lo, hi);
}

PolynomialSpec read_polynomial(const json& j, const std::string& path) {
  Section s(j, path);
  PolynomialSpec p;
  s.read("name", p.name);
  s.read_count("state_dim", p.state_dim);
  auto req = [&](const std::string& key) -> const json& {
    if (!s.has(key)) throw ConfigError("missing key '" + s.key_path(key) + "'");
    return s.at(key);
  };
  p.drift = read_map(req("drift"), s.key_path("drift"));
  p.control_gain = read_map(req("control_gain"), s.key_path("control_gain"));
  p.disturbance_gain = read_map(req("disturbance_gain"), s.key_path("disturbance_gain"));
  p.constraint = read_terms(req("constraint"), s.key_path("constraint"));
  p.control_box = read_box(s, "control_box");
  p.disturbance_box = read_box(s, "disturbance_box");
  s.finish();
  return p;
}

ModelSpec read_model(const json& j) {
  Section s(j, "model");
  ModelSpec m;
  s.read("builtin", m.builtin);
  if (s.has("params")) {
    Section ps(s.at("params"), "model.params");
    for (const auto& item : s.at("params").items()) {
      double v = 0.0;
      ps.read_number(item.key(), v);
      m.params[item.key()] = v;
    }
    ps.finish();
  }
  if (s.has("polynomial")) m.polynomial = read_polynomial(s.at("polynomial"), "model.polynomial");
  s.finish();
  return m;
}

GridSpec read_grid(const json& j) {
  Section s(j, "grid");
  GridSpec g;
  s.read_vec("lower", g.lower);
  s.read_vec("upper", g.upper);
  s.read("counts", g.counts);
  s.finish();
  if (g.lower.empty() || g.lower.size() != g.upper.size() || g.lower.size() != g.counts.size())
    throw ConfigError("grid: lower, upper and counts must be nonempty and of equal length");
  return g;
}

SolveSection read_solve(const json& j) {
  Section s(j, "solve");
  SolveSection out;
  SolveConfig& c = out.config;
  s.read_number("gamma", c.gamma);
  if (s.has("backend")) c.backend = parse_backend(s.at("backend").get<std::string>());
  s.read_number("dt", c.dt);
  s.read_number("cfl", c.cfl);
  s.read_number("tol", c.tol);
  s.read_count("max_iters", c.max_iters);
  if (s.has("value")) out.value = parse_value_selection(s.at("value").get<std::string>());
  if (s.has("foot_point")) c.foot_point = parse_foot_point(s.at("foot_point").get<std::string>());
  s.read("local_dissipation", c.local_dissipation);
  s.read_count("progress_interval", c.progress_interval);
  if (s.has("hamiltonian")) {
    Section h(s.at("hamiltonian"), "solve.hamiltonian");
    HamiltonianOptions& o = c.hamiltonian;
    if (h.has("mode")) {
      const auto mode = h.at("mode").get<std::string>();
      if (mode == "auto") o.mode.reset();
      else if (mode == "analytic") o.mode = HamiltonianMode::analytic_affine;
      else if (mode == "sampled") o.mode = HamiltonianMode::sampled;
      else throw ConfigError("solve.hamiltonian.mode: expected auto|analytic|sampled, got '" + mode + "'");
    }
    h.read_count("control_samples", o.control_samples);
    h.read_count("disturbance_samples", o.disturbance_samples);
    h.read_number("safety_factor", o.safety_factor);
    h.finish();
  }
  s.finish();
  c.validate();
  return out;
}

ExtractSection read_extract(const json& j) {
  Section s(j, "extract");
  ExtractSection e;
  s.read_number("epsilon_set", e.epsilon_set);
  s.read_vec("levels", e.levels);
  s.read("vtk", e.vtk);
  s.finish();
  if (!(e.epsilon_set >= 0.0)) throw ConfigError("extract.epsilon_set: must be >= 0");
  return e;
}

PolicySpec read_policy(const json& j, const std::string& path) {
  PolicySpec p;
  if (j.is_string()) {
    p.type = j.get<std::string>();
    return p;
  }
  Section s(j, path);
  s.read("type", p.type);
  if (s.has("values")) {
    const json& v = s.at("values");
    try {
      p.values = v.get<std::vector<Vec>>();
    } catch (const json::exception&) {
      throw ConfigError(s.key_path("values") + ": expected an array of number arrays");
    }
  }
  s.finish();
  return p;
}

SimulateSection read_simulate(const json& j) {
  Section s(j, "simulate");
  SimulateSection m;
  s.read_vec("x0", m.x0);
  s.read_number("t_final", m.t_final);
  s.read_number("dt_sim", m.dt_sim);
  if (s.has("control")) m.control = read_policy(s.at("control"), "simulate.control");
  if (s.has("disturbance")) m.disturbance = read_policy(s.at("disturbance"), "simulate.disturbance");
  s.read("seed", m.seed);
  s.finish();
  return m;
}

VerifySection read_verify(const json& j) {
  Section s(j, "verify");
  VerifySection v;
  s.read_count("trials", v.trials);
  s.read_number("epsilon", v.epsilon);
  s.read_number("t_final", v.t_final);
  s.read_number("dt_sim", v.dt_sim);
  s.read_count("margin", v.margin);
  s.read_number("threshold", v.threshold);
  s.read("seed", v.seed);
  s.read_count("oracle_nodes", v.oracle_nodes);
  s.read_number("oracle_tol", v.oracle_tol);
  s.finish();
  if (v.oracle_nodes < 3) throw ConfigError("verify.oracle_nodes: must be at least 3");
  return v;
}

json terms_json(const std::vector<Monomial>& terms) {
  json a = json::array();
  for (const auto& m : terms) a.push_back({{"coefficient", m.coefficient}, {"exponents", m.exponents}});
  return a;
}

json map_json(const std::vector<std::vector<Monomial>>& outputs) {
  json a = json::array();
  for (const auto& o : outputs) a.push_back(terms_json(o));
  return a;
}

json box_json(const Box& b) { return {{"lower", b.lower}, {"upper", b.upper}}; }

json policy_json(const PolicySpec& p) {
  json j = {{"type", p.type}};
  if (!p.values.empty()) j["values"] = p.values;
  return j;
}

std::string hamiltonian_mode_name(const std::optional<HamiltonianMode>& mode) {
  if (!mode) return "auto";
  return *mode == HamiltonianMode::analytic_affine ? "analytic" : "sampled";
}

}  // namespace

GameModel ModelSpec::build() const {
  if (!polynomial) return builtin_model(builtin, params);
  const PolynomialSpec& p = *polynomial;
  const std::size_t n = p.state_dim;
  if (p.drift.size() != n) throw ConfigError("model.polynomial.drift: expected state_dim outputs");
  if (p.control_gain.size() != n * p.control_box.dim())
    throw ConfigError("model.polynomial.control_gain: expected state_dim * control_dim outputs");
  if (p.disturbance_gain.size() != n * p.disturbance_box.dim())
    throw ConfigError("model.polynomial.disturbance_gain: expected state_dim * disturbance_dim outputs");
  AffineDynamics dyn{PolynomialMap(n, p.drift), PolynomialMap(n, p.control_gain),
                     PolynomialMap(n, p.disturbance_gain)};
  return polynomial_model(p.name, std::move(dyn), p.control_box, p.disturbance_box,
                          PolynomialMap(n, {p.constraint}));
}

std::string_view to_string(ValueSelection value) {
  switch (value) {
    case ValueSelection::lower: return "lower";
    case ValueSelection::upper: return "upper";
    case ValueSelection::both: return "both";
  }
  return "both";
}

ValueSelection parse_value_selection(std::string_view text) {
  if (text == "lower") return ValueSelection::lower;
  if (text == "upper") return ValueSelection::upper;
  if (text == "both") return ValueSelection::both;
  throw ConfigError("unknown value selection '" + std::string(text) + "' (expected lower|upper|both)");
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line number for the diagnostic.
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1;
    for (std::size_t i = 0; i + 1 < upto; ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ": " + e.what());
  }
  RunConfig cfg;
  try {
    Section s(root, "");
    if (s.has("model")) cfg.model = read_model(s.at("model"));
    if (s.has("grid")) cfg.grid = read_grid(s.at("grid"));
    if (s.has("solve")) cfg.solve = read_solve(s.at("solve"));
    if (s.has("extract")) cfg.extract = read_extract(s.at("extract"));
    if (s.has("simulate")) cfg.simulate = read_simulate(s.at("simulate"));
    if (s.has("verify")) cfg.verify = read_verify(s.at("verify"));
    if (s.has("paths")) {
      Section p(s.at("paths"), "paths");
      p.read("out", cfg.paths.out);
      p.finish();
    }
    s.finish();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize_config(const RunConfig& cfg) {
  json root = json::object();
  if (cfg.model) {
    json m = {{"builtin", cfg.model->builtin}};
    json params = json::object();
    for (const auto& [k, v] : cfg.model->params) params[k] = v;
    m["params"] = params;
    if (cfg.model->polynomial) {
      const auto& p = *cfg.model->polynomial;
      m["polynomial"] = {{"name", p.name},
                         {"state_dim", p.state_dim},
                         {"drift", map_json(p.drift)},
                         {"control_gain", map_json(p.control_gain)},
                         {"disturbance_gain", map_json(p.disturbance_gain)},
                         {"constraint", terms_json(p.constraint)},
                         {"control_box", box_json(p.control_box)},
                         {"disturbance_box", box_json(p.disturbance_box)}};
    }
    root["model"] = m;
  }
  if (cfg.grid) root["grid"] = {{"lower", cfg.grid->lower}, {"upper", cfg.grid->upper}, {"counts", cfg.grid->counts}};

  const SolveConfig& c = cfg.solve.config;
  root["solve"] = {{"gamma", c.gamma},
                   {"backend", std::string(to_string(c.backend))},
                   {"dt", c.dt},
                   {"cfl", c.cfl},
                   {"tol", c.tol},
                   {"max_iters", c.max_iters},
                   {"value", std::string(to_string(cfg.solve.value))},
                   {"foot_point", std::string(to_string(c.foot_point))},
                   {"local_dissipation", c.local_dissipation},
                   {"progress_interval", c.progress_interval},
                   {"hamiltonian",
                    {{"mode", hamiltonian_mode_name(c.hamiltonian.mode)},
                     {"control_samples", c.hamiltonian.control_samples},
                     {"disturbance_samples", c.hamiltonian.disturbance_samples},
                     {"safety_factor", c.hamiltonian.safety_factor}}}};
  root["extract"] = {{"epsilon_set", cfg.extract.epsilon_set}, {"levels", cfg.extract.levels}, {"vtk", cfg.extract.vtk}};
  const auto& sim = cfg.simulate;
  root["simulate"] = {{"x0", sim.x0},
                      {"t_final", sim.t_final},
                      {"dt_sim", sim.dt_sim},
                      {"control", policy_json(sim.control)},
                      {"disturbance", policy_json(sim.disturbance)},
                      {"seed", sim.seed}};
  const auto& v = cfg.verify;
  root["verify"] = {{"trials", v.trials},       {"epsilon", v.epsilon},       {"t_final", v.t_final},
                    {"dt_sim", v.dt_sim},       {"margin", v.margin},         {"threshold", v.threshold},
                    {"seed", v.seed},           {"oracle_nodes", v.oracle_nodes}, {"oracle_tol", v.oracle_tol}};
  root["paths"] = {{"out", cfg.paths.out}};
  return root.dump(2) + "\n";
}

}  // namespace rcis::cli
