#include "rcis/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rcis/errors.hpp"

namespace rcis {

namespace {

std::string point_string(std::span<const double> x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

Monomial term(double c, std::vector<int> e) { return Monomial{c, std::move(e)}; }

}  // namespace

Box::Box(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw ConfigError("box: lower/upper length mismatch");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
      throw ConfigError("box: axis " + std::to_string(i) + " needs finite lower <= upper");
    }
  }
}

bool Box::contains(std::span<const double> v) const {
  if (v.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!(v[i] >= lower[i] && v[i] <= upper[i])) return false;
  }
  return true;
}

bool Box::is_singleton() const {
  for (std::size_t i = 0; i < dim(); ++i) {
    if (lower[i] != upper[i]) return false;
  }
  return true;
}

std::vector<Vec> Box::samples(std::size_t per_axis) const {
  std::vector<Vec> axes(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    if (lower[i] == upper[i] || per_axis <= 1) {
      axes[i] = {lower[i] == upper[i] ? lower[i] : center(i)};
      continue;
    }
    for (std::size_t j = 0; j < per_axis; ++j) {
      // Endpoints are hit exactly so vertex samples are the true vertices.
      const double v = j + 1 == per_axis
                           ? upper[i]
                           : lower[i] + static_cast<double>(j) * (upper[i] - lower[i]) /
                                            static_cast<double>(per_axis - 1);
      axes[i].push_back(v);
    }
  }
  std::vector<Vec> out{Vec{}};
  for (const auto& axis : axes) {
    std::vector<Vec> next;
    next.reserve(out.size() * axis.size());
    for (const auto& prefix : out) {
      for (double v : axis) {
        Vec s = prefix;
        s.push_back(v);
        next.push_back(std::move(s));
      }
    }
    out = std::move(next);
  }
  return out;
}

PolynomialMap::PolynomialMap(std::size_t input_dim, std::vector<std::vector<Monomial>> outputs)
    : input_dim_(input_dim), outputs_(std::move(outputs)) {
  for (const auto& terms : outputs_) {
    for (const auto& t : terms) {
      if (t.exponents.size() != input_dim_) {
        throw ConfigError("polynomial: exponent vector length " + std::to_string(t.exponents.size()) +
                          " does not match input dimension " + std::to_string(input_dim_));
      }
      for (int e : t.exponents) {
        if (e < 0) throw ConfigError("polynomial: negative exponent");
      }
      if (!std::isfinite(t.coefficient)) throw ConfigError("polynomial: non-finite coefficient");
    }
  }
}

void PolynomialMap::evaluate(std::span<const double> x, std::span<double> out) const {
  for (std::size_t r = 0; r < outputs_.size(); ++r) {
    double sum = 0.0;
    for (const auto& t : outputs_[r]) {
      double m = t.coefficient;
      for (std::size_t i = 0; i < input_dim_; ++i) {
        for (int k = 0; k < t.exponents[i]; ++k) m *= x[i];
      }
      sum += m;
    }
    out[r] = sum;
  }
}

Vec PolynomialMap::evaluate(std::span<const double> x) const {
  Vec out(output_dim());
  evaluate(x, out);
  return out;
}

double normalize_constraint_value(double raw) {
  // The mathematical bound is 1/2; clamping absorbs the last-ulp rounding.
  return std::clamp(raw / (1.0 + raw * raw), -0.5, 0.5);
}

ConstraintFn normalize_constraint(ConstraintFn raw) {
  return [raw = std::move(raw)](std::span<const double> x) { return normalize_constraint_value(raw(x)); };
}

GameModel::GameModel(std::string name, std::size_t state_dim, Box control_box, Box disturbance_box,
                     std::variant<AffineDynamics, GeneralDynamics> dynamics, Constraint constraint)
    : name_(std::move(name)),
      state_dim_(state_dim),
      control_box_(std::move(control_box)),
      disturbance_box_(std::move(disturbance_box)),
      dynamics_(std::move(dynamics)),
      constraint_(std::move(constraint)) {
  if (state_dim_ == 0) throw ConfigError("model: state dimension must be positive");
  if (!constraint_.h) throw ConfigError("model: missing constraint function");
  if (!(constraint_.bound > 0.0)) throw ConfigError("model: constraint bound M must be positive");
  if (const auto* a = std::get_if<AffineDynamics>(&dynamics_)) {
    const std::size_t n = state_dim_;
    if (a->drift.input_dim() != n || a->drift.output_dim() != n) {
      throw ConfigError("model: drift must map R^n to R^n");
    }
    if (a->control_gain.input_dim() != n || a->control_gain.output_dim() != n * control_dim()) {
      throw ConfigError("model: control gain must be an n x m polynomial matrix");
    }
    if (a->disturbance_gain.input_dim() != n ||
        a->disturbance_gain.output_dim() != n * disturbance_dim()) {
      throw ConfigError("model: disturbance gain must be an n x l polynomial matrix");
    }
  } else if (!std::get<GeneralDynamics>(dynamics_).evaluate) {
    throw ConfigError("model: missing dynamics evaluator");
  }
}

const AffineDynamics& GameModel::affine() const {
  if (const auto* a = std::get_if<AffineDynamics>(&dynamics_)) return *a;
  throw PreconditionError("model '" + name_ + "' does not have control-affine dynamics");
}

Vec GameModel::eval_dynamics(std::span<const double> x, std::span<const double> u,
                             std::span<const double> d) const {
  if (x.size() != state_dim_) throw ShapeError("dynamics: state has wrong dimension");
  if (!control_box_.contains(u)) throw DomainError("dynamics: control " + point_string(u) + " outside U");
  if (!disturbance_box_.contains(d)) {
    throw DomainError("dynamics: disturbance " + point_string(d) + " outside D");
  }
  Vec out(state_dim_);
  eval_dynamics_unchecked(x, u, d, out);
  return out;
}

void GameModel::eval_dynamics_unchecked(std::span<const double> x, std::span<const double> u,
                                        std::span<const double> d, std::span<double> out) const {
  if (const auto* a = std::get_if<AffineDynamics>(&dynamics_)) {
    const std::size_t n = state_dim_, m = control_dim(), l = disturbance_dim();
    double gain[64];
    std::vector<double> heap;
    double* g = gain;
    const std::size_t need = n * std::max<std::size_t>(std::max(m, l), 1);
    if (need > std::size(gain)) {
      heap.resize(need);
      g = heap.data();
    }
    a->drift.evaluate(x, out);
    a->control_gain.evaluate(x, std::span<double>(g, n * m));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) out[i] += g[i * m + j] * u[j];
    }
    a->disturbance_gain.evaluate(x, std::span<double>(g, n * l));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < l; ++k) out[i] += g[i * l + k] * d[k];
    }
  } else {
    std::get<GeneralDynamics>(dynamics_).evaluate(x, u, d, out);
  }
}

void GameModel::check_constraint_bound(const Grid& grid) const {
  if (grid.dim() != state_dim_) throw ConfigError("grid dimension does not match the model state");
  const double m = constraint_.bound;
  Vec p(grid.dim());
  auto check = [&](std::span<const double> x) {
    const double h = constraint_.h(x);
    if (!std::isfinite(h) || std::abs(h) > m) {
      throw ConfigError("model '" + name_ + "': |h" + point_string(x) + "| = " +
                        std::to_string(std::abs(h)) + " exceeds the declared bound M = " +
                        std::to_string(m));
    }
  };
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid.node_point(k, p);
    check(p);
    // Cell center of the cell whose lowest corner is this node.
    bool interior = true;
    for (std::size_t i = 0; i < grid.dim(); ++i) {
      if (p[i] + grid.spacing()[i] > grid.upper()[i] + 0.5 * grid.spacing()[i]) interior = false;
      p[i] += 0.5 * grid.spacing()[i];
    }
    if (interior) check(p);
  }
}

void GameModel::check_box_margin(const Grid& grid, double epsilon_set, std::size_t cells) const {
  if (grid.dim() != state_dim_) throw ConfigError("grid dimension does not match the model state");
  Vec p(grid.dim());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.in_boundary_band(k, cells)) continue;
    grid.node_point(k, p);
    const double h = constraint_.h(p);
    if (!(h > epsilon_set)) {
      throw ConfigError("grid box does not contain {h <= " + std::to_string(epsilon_set) +
                        "} with a " + std::to_string(cells) + "-cell margin: h" + point_string(p) +
                        " = " + std::to_string(h) + " inside the boundary band");
    }
  }
}

namespace {

double take(ModelParams& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  if (it == p.end()) return fallback;
  const double v = it->second;
  p.erase(it);
  return v;
}

void reject_leftovers(const std::string& model, const ModelParams& p) {
  if (!p.empty()) {
    throw ConfigError("model '" + model + "': unknown parameter '" + p.begin()->first + "'");
  }
}

Constraint disk_constraint(std::size_t n, double radius) {
  const double r2 = radius * radius;
  Constraint c;
  c.h = [n, r2](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return normalize_constraint_value(s - r2);
  };
  c.bound = 0.5;
  c.description = "normalized |x|^2 - " + std::to_string(r2);
  return c;
}

GameModel jet_engine(ModelParams p) {
  const double ub = take(p, "u_bound", 0.01);
  const double db = take(p, "d_bound", 0.02);
  reject_leftovers("jet_engine", p);
  // x' = -y - 1.5 x^2 - 0.5 x^3 + d
  // y' = (0.8076 + u) x - 0.9424 y
  AffineDynamics dyn{
      PolynomialMap(2, {{term(-1.0, {0, 1}), term(-1.5, {2, 0}), term(-0.5, {3, 0})},
                        {term(0.8076, {1, 0}), term(-0.9424, {0, 1})}}),
      PolynomialMap(2, {{}, {term(1.0, {1, 0})}}),
      PolynomialMap(2, {{term(1.0, {0, 0})}, {}}),
  };
  return GameModel("jet_engine", 2, Box({-ub}, {ub}), Box({-db}, {db}), std::move(dyn),
                   disk_constraint(2, 0.5));
}

GameModel singleton_1d(ModelParams p) {
  reject_leftovers("singleton_1d", p);
  AffineDynamics dyn{
      PolynomialMap(1, {{term(-1.0, {1})}}),
      PolynomialMap(1, {{}}),
      PolynomialMap(1, {{}}),
  };
  return GameModel("singleton_1d", 1, Box({0.0}, {0.0}), Box({0.0}, {0.0}), std::move(dyn),
                   disk_constraint(1, 0.5));
}

GameModel affine_test_2d(ModelParams p) {
  const double a11 = take(p, "a11", -0.5), a12 = take(p, "a12", 1.0);
  const double a21 = take(p, "a21", -1.0), a22 = take(p, "a22", -0.5);
  const double b1 = take(p, "b1", 0.0), b2 = take(p, "b2", 1.0);
  const double c1 = take(p, "c1", 1.0), c2 = take(p, "c2", 0.0);
  const double ub = take(p, "u_bound", 0.1), db = take(p, "d_bound", 0.05);
  const double radius = take(p, "radius", 0.5);
  reject_leftovers("affine_test_2d", p);
  if (!(radius > 0.0)) throw ConfigError("affine_test_2d: radius must be positive");
  AffineDynamics dyn{
      PolynomialMap(2, {{term(a11, {1, 0}), term(a12, {0, 1})}, {term(a21, {1, 0}), term(a22, {0, 1})}}),
      PolynomialMap(2, {{term(b1, {0, 0})}, {term(b2, {0, 0})}}),
      PolynomialMap(2, {{term(c1, {0, 0})}, {term(c2, {0, 0})}}),
  };
  return GameModel("affine_test_2d", 2, Box({-ub}, {ub}), Box({-db}, {db}), std::move(dyn),
                   disk_constraint(2, radius));
}

}  // namespace

GameModel builtin_model(const std::string& name, const ModelParams& params) {
  if (name == "jet_engine") return jet_engine(params);
  if (name == "singleton_1d") return singleton_1d(params);
  if (name == "affine_test_2d") return affine_test_2d(params);
  throw ConfigError("unknown built-in model '" + name + "'");
}

std::vector<std::string> builtin_model_names() { return {"jet_engine", "singleton_1d", "affine_test_2d"}; }

GameModel polynomial_model(std::string name, AffineDynamics dynamics, Box control_box,
                           Box disturbance_box, PolynomialMap raw_constraint) {
  const std::size_t n = dynamics.drift.input_dim();
  if (raw_constraint.input_dim() != n || raw_constraint.output_dim() != 1) {
    throw ConfigError("model: constraint must be a scalar polynomial of the state");
  }
  Constraint c;
  c.h = normalize_constraint([poly = std::move(raw_constraint)](std::span<const double> x) {
    double v;
    poly.evaluate(x, std::span<double>(&v, 1));
    return v;
  });
  c.bound = 0.5;
  c.description = "normalized polynomial";
  return GameModel(std::move(name), n, std::move(control_box), std::move(disturbance_box),
                   std::move(dynamics), std::move(c));
}

}  // namespace rcis
