#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rcis/grid.hpp"

namespace rcis {

/// Axis-aligned box; the only shape used for control and disturbance sets.
struct Box {
  Vec lower;
  Vec upper;

  Box() = default;
  /// Throws ConfigError unless lower_i <= upper_i (finite).
  Box(Vec lo, Vec hi);

  std::size_t dim() const { return lower.size(); }
  bool contains(std::span<const double> v) const;
  double center(std::size_t i) const { return 0.5 * (lower[i] + upper[i]); }
  double radius(std::size_t i) const { return 0.5 * (upper[i] - lower[i]); }
  bool is_singleton() const;

  /// Tensor grid of `per_axis` uniform samples per axis, lexicographic with
  /// the first axis slowest. Degenerate axes contribute a single sample, and
  /// per_axis == 2 yields exactly the box vertices.
  std::vector<Vec> samples(std::size_t per_axis) const;

  bool operator==(const Box&) const = default;
};

struct Monomial {
  double coefficient = 0.0;
  std::vector<int> exponents;

  bool operator==(const Monomial&) const = default;
};

/// Vector-valued polynomial R^n -> R^r stored as per-output term lists.
/// Terms are summed in stored order.
class PolynomialMap {
 public:
  PolynomialMap() = default;
  PolynomialMap(std::size_t input_dim, std::vector<std::vector<Monomial>> outputs);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return outputs_.size(); }
  const std::vector<std::vector<Monomial>>& outputs() const { return outputs_; }

  void evaluate(std::span<const double> x, std::span<double> out) const;
  Vec evaluate(std::span<const double> x) const;

  bool operator==(const PolynomialMap&) const = default;

 private:
  std::size_t input_dim_ = 0;
  std::vector<std::vector<Monomial>> outputs_;
};

/// f(x,u,d) = drift(x) + control_gain(x) u + disturbance_gain(x) d.
/// Gains are n x m and n x l matrices flattened row-major into the outputs of
/// their polynomial maps.
struct AffineDynamics {
  PolynomialMap drift;
  PolynomialMap control_gain;
  PolynomialMap disturbance_gain;
};

using DynamicsFn = std::function<void(std::span<const double> x, std::span<const double> u,
                                      std::span<const double> d, std::span<double> out)>;

struct GeneralDynamics {
  DynamicsFn evaluate;
};

using ConstraintFn = std::function<double(std::span<const double> x)>;

/// h together with a declared bound M >= sup |h|. X = {h <= 0}.
struct Constraint {
  ConstraintFn h;
  double bound = 0.0;
  std::string description;
};

/// h / (1 + h^2): bounded by 1/2, same sign and zero set as h.
ConstraintFn normalize_constraint(ConstraintFn raw);
double normalize_constraint_value(double raw);

class GameModel {
 public:
  GameModel(std::string name, std::size_t state_dim, Box control_box, Box disturbance_box,
            std::variant<AffineDynamics, GeneralDynamics> dynamics, Constraint constraint);

  const std::string& name() const { return name_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t control_dim() const { return control_box_.dim(); }
  std::size_t disturbance_dim() const { return disturbance_box_.dim(); }
  const Box& control_box() const { return control_box_; }
  const Box& disturbance_box() const { return disturbance_box_; }
  const Constraint& constraint() const { return constraint_; }

  bool is_affine() const { return std::holds_alternative<AffineDynamics>(dynamics_); }
  /// Throws PreconditionError for general dynamics.
  const AffineDynamics& affine() const;

  /// f(x,u,d); throws DomainError when u or d lies outside its box.
  Vec eval_dynamics(std::span<const double> x, std::span<const double> u,
                    std::span<const double> d) const;
  /// Same without the membership checks; used in inner loops.
  void eval_dynamics_unchecked(std::span<const double> x, std::span<const double> u,
                               std::span<const double> d, std::span<double> out) const;

  double eval_constraint(std::span<const double> x) const { return constraint_.h(x); }

  /// Checks |h| <= M (tolerance 0) at every grid node and at cell centers.
  /// Throws ConfigError naming the offending point.
  void check_constraint_bound(const Grid& grid) const;

  /// Requires the box to contain {h <= epsilon_set} with a margin of `cells`
  /// cells: every node in the boundary band must have h > epsilon_set.
  void check_box_margin(const Grid& grid, double epsilon_set, std::size_t cells = 2) const;

 private:
  std::string name_;
  std::size_t state_dim_;
  Box control_box_;
  Box disturbance_box_;
  std::variant<AffineDynamics, GeneralDynamics> dynamics_;
  Constraint constraint_;
};

using ModelParams = std::map<std::string, double>;

/// Built-in models: "jet_engine", "singleton_1d", "affine_test_2d".
/// Unknown names or parameter keys throw ConfigError.
GameModel builtin_model(const std::string& name, const ModelParams& params = {});
std::vector<std::string> builtin_model_names();

/// Model assembled from explicit polynomial tables; h is the normalized
/// raw polynomial, with declared bound 1/2.
GameModel polynomial_model(std::string name, AffineDynamics dynamics, Box control_box,
                           Box disturbance_box, PolynomialMap raw_constraint);

}  // namespace rcis
