#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rcis/dynamics.hpp"
#include "rcis/grid.hpp"
#include "rcis/value_field.hpp"

namespace rcis::oracle {

// Brute-force ground truth for small instances. Nothing here calls into the
// solver code: transitions, interpolation weights and the value recursion
// are implemented independently.

/// Fully discretized game: one explicit Euler step, clamped to the box, and
/// distributed over the surrounding nodes with multilinear weights.
struct DiscreteGame {
  Grid nodes;
  std::vector<Vec> controls;
  std::vector<Vec> disturbances;
  double discount = 0.0;  ///< e^{-gamma dt}
  std::vector<double> obstacle;

  struct Transition {
    std::vector<std::size_t> targets;
    std::vector<double> weights;
  };
  /// Indexed [node][d * controls.size() + u].
  std::vector<std::vector<Transition>> transitions;
};

DiscreteGame build_discrete_game(const GameModel& model, const Grid& nodes, std::vector<Vec> controls,
                                 std::vector<Vec> disturbances, double gamma, double dt);

struct BruteForceResult {
  std::vector<double> values;
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Plain value iteration of V = max{h, beta OPT sum_j w_j V(node_j)} from
/// V = h until the sup-norm update is <= tol. OPT is max_d min_u for the
/// lower game and min_u max_d for the upper game.
BruteForceResult brute_force_value(const DiscreteGame& game, ValueKind kind, double tol,
                                   std::size_t max_iters = 50'000'000);

struct PayoffEstimate {
  double value = 0.0;         ///< max over RK4 sample times of e^{-gamma t} h(x(t))
  double tail_bound = 0.0;    ///< e^{-gamma t_final} M
  double step_modulus = 0.0;  ///< largest change of the sampled integrand per step
  double error_bar = 0.0;     ///< tail_bound + step_modulus
  double argmax_time = 0.0;
};

/// Discounted sup-over-time payoff of the single trajectory of a model with
/// singleton control and disturbance sets. Throws PreconditionError for
/// non-singleton boxes or when e^{-gamma t_final} M >= 1e-6.
PayoffEstimate direct_payoff(const GameModel& model, std::span<const double> x0, double gamma,
                             double t_final, double dt_sim);

}  // namespace rcis::oracle
