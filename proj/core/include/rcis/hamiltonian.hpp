#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcis/dynamics.hpp"
#include "rcis/grid.hpp"
#include "rcis/value_field.hpp"

namespace rcis {

enum class HamiltonianMode { analytic_affine, sampled };

struct HamiltonianOptions {
  /// Unset: analytic for affine models, sampled otherwise.
  std::optional<HamiltonianMode> mode;
  /// Samples per box axis; 0 picks the default (box vertices for affine
  /// models, 5 otherwise).
  std::size_t control_samples = 0;
  std::size_t disturbance_samples = 0;
  double safety_factor = 1.1;

  bool operator==(const HamiltonianOptions&) const = default;
};

/// Pointwise minimax of p . f(x,u,d) over the control and disturbance boxes.
///
///   lower: H-(x,p) = sup_d inf_u p . f
///   upper: H+(x,p) = inf_u sup_d p . f
///
/// For affine dynamics with box sets both orderings reduce to the same
/// closed form, since the u and d contributions decouple.
class HamiltonianEvaluator {
 public:
  /// The model must outlive the evaluator.
  HamiltonianEvaluator(const GameModel& model, HamiltonianOptions options = {});

  const GameModel& model() const { return *model_; }
  HamiltonianMode mode() const { return mode_; }
  double safety_factor() const { return safety_factor_; }

  double lower(std::span<const double> x, std::span<const double> p) const;
  double upper(std::span<const double> x, std::span<const double> p) const;
  double eval(ValueKind kind, std::span<const double> x, std::span<const double> p) const {
    return kind == ValueKind::lower ? lower(x, p) : upper(x, p);
  }

  /// Action samples in lexicographic order; they are also the discrete
  /// action sets of the semi-Lagrangian scheme and the feedback synthesis.
  const std::vector<Vec>& control_samples() const { return controls_; }
  const std::vector<Vec>& disturbance_samples() const { return disturbances_; }

  /// alpha_i = safety * max |f_i| over grid nodes and action samples (box
  /// vertices for affine models). All-zero axes get a machine-epsilon floor
  /// and a message in `warnings`.
  Vec dissipation_bounds(const Grid& grid, std::vector<std::string>* warnings = nullptr) const;

 private:
  double sampled(ValueKind kind, std::span<const double> x, std::span<const double> p) const;

  const GameModel* model_;
  HamiltonianMode mode_;
  double safety_factor_;
  std::vector<Vec> controls_;
  std::vector<Vec> disturbances_;
};

/// Per-node precomputation of the Hamiltonian over a grid, so that sweeps
/// evaluate H from cached drift/gain values (analytic mode) or cached f at
/// every action pair (sampled mode).
class HamiltonianTable {
 public:
  HamiltonianTable(const HamiltonianEvaluator& evaluator, const Grid& grid);

  double eval(ValueKind kind, std::size_t node, std::span<const double> p) const;

 private:
  HamiltonianMode mode_;
  std::size_t n_, m_, l_;
  std::size_t stride_;
  Vec u_center_, u_radius_, d_center_, d_radius_;
  std::size_t n_controls_ = 0, n_disturbances_ = 0;
  std::vector<double> data_;
};

}  // namespace rcis
