#include "rcis/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcis/errors.hpp"

namespace rcis::oracle {

namespace {

// Tensor-product linear weights of `point` on the node lattice.
DiscreteGame::Transition spread(const Grid& grid, const Vec& point) {
  const std::size_t n = grid.dim();
  std::vector<std::size_t> lo(n);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = grid.lower()[i], b = grid.upper()[i], h = grid.spacing()[i];
    const double x = std::min(std::max(point[i], a), b);
    auto cell = static_cast<std::size_t>((x - a) / h);
    cell = std::min(cell, grid.counts()[i] - 2);
    lo[i] = cell;
    t[i] = std::min(1.0, std::max(0.0, (x - (a + h * static_cast<double>(cell))) / h));
  }
  DiscreteGame::Transition tr;
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool up = (corner >> i) & 1u;
      w *= up ? t[i] : 1.0 - t[i];
      flat += (lo[i] + (up ? 1 : 0)) * grid.strides()[i];
    }
    tr.targets.push_back(flat);
    tr.weights.push_back(w);
  }
  return tr;
}

}  // namespace

DiscreteGame build_discrete_game(const GameModel& model, const Grid& nodes, std::vector<Vec> controls,
                                 std::vector<Vec> disturbances, double gamma, double dt) {
  if (!(dt > 0.0) || !(gamma > 0.0)) throw ConfigError("oracle: gamma and dt must be positive");
  if (controls.empty() || disturbances.empty()) throw ConfigError("oracle: empty action set");
  DiscreteGame game;
  game.nodes = nodes;
  game.controls = std::move(controls);
  game.disturbances = std::move(disturbances);
  game.discount = std::exp(-gamma * dt);
  game.obstacle.resize(nodes.size());
  game.transitions.resize(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Vec x = nodes.node_point(k);
    game.obstacle[k] = model.eval_constraint(x);
    for (const auto& d : game.disturbances) {
      for (const auto& u : game.controls) {
        const Vec f = model.eval_dynamics(x, u, d);
        Vec next(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) next[i] = x[i] + dt * f[i];
        game.transitions[k].push_back(spread(nodes, next));
      }
    }
  }
  return game;
}

BruteForceResult brute_force_value(const DiscreteGame& game, ValueKind kind, double tol, std::size_t max_iters) {
  if (!(tol > 0.0)) throw ConfigError("oracle: tol must be positive");
  const std::size_t nu = game.controls.size(), nd = game.disturbances.size();
  BruteForceResult out;
  std::vector<double> v = game.obstacle, next(v.size());
  std::vector<double> q(nu * nd);
  while (out.iterations < max_iters) {
    double change = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      for (std::size_t a = 0; a < q.size(); ++a) {
        const auto& tr = game.transitions[k][a];
        double s = 0.0;
        for (std::size_t j = 0; j < tr.targets.size(); ++j) s += tr.weights[j] * v[tr.targets[j]];
        q[a] = s;
      }
      double opt;
      if (kind == ValueKind::lower) {
        opt = -std::numeric_limits<double>::infinity();
        for (std::size_t d = 0; d < nd; ++d) {
          double worst = std::numeric_limits<double>::infinity();
          for (std::size_t u = 0; u < nu; ++u) worst = std::min(worst, q[d * nu + u]);
          opt = std::max(opt, worst);
        }
      } else {
        opt = std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < nu; ++u) {
          double worst = -std::numeric_limits<double>::infinity();
          for (std::size_t d = 0; d < nd; ++d) worst = std::max(worst, q[d * nu + u]);
          opt = std::min(opt, worst);
        }
      }
      next[k] = std::max(game.obstacle[k], game.discount * opt);
      change = std::max(change, std::abs(next[k] - v[k]));
    }
    v.swap(next);
    ++out.iterations;
    out.residual = change;
    if (change <= tol) break;
  }
  out.values = std::move(v);
  return out;
}

PayoffEstimate direct_payoff(const GameModel& model, std::span<const double> x0, double gamma,
                             double t_final, double dt_sim) {
  if (!model.control_box().is_singleton() || !model.disturbance_box().is_singleton()) {
    throw PreconditionError("direct payoff needs singleton control and disturbance sets");
  }
  if (!(gamma > 0.0) || !(dt_sim > 0.0)) throw PreconditionError("direct payoff: gamma and dt must be positive");
  const double m = model.constraint().bound;
  const double tail = std::exp(-gamma * t_final) * m;
  if (!(tail < 1e-6)) {
    throw PreconditionError("direct payoff: t_final too short, e^{-gamma t_final} M = " + std::to_string(tail));
  }
  const Vec u = model.control_box().lower;
  const Vec d = model.disturbance_box().lower;
  const std::size_t n = model.state_dim();
  const auto steps = static_cast<std::size_t>(std::ceil(t_final / dt_sim - 1e-9));

  auto rhs = [&](const Vec& x) { return model.eval_dynamics(x, u, d); };
  Vec x(x0.begin(), x0.end());
  PayoffEstimate est;
  double prev = model.eval_constraint(x);
  est.value = prev;
  est.argmax_time = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t0 = static_cast<double>(k - 1) * dt_sim;
    const double t1 = k == steps ? t_final : static_cast<double>(k) * dt_sim;
    const double h = t1 - t0;
    const Vec a = rhs(x);
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + 0.5 * h * a[i];
    const Vec b = rhs(y);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + 0.5 * h * b[i];
    const Vec c = rhs(y);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + h * c[i];
    const Vec e = rhs(y);
    for (std::size_t i = 0; i < n; ++i) x[i] += h * (a[i] + 2.0 * b[i] + 2.0 * c[i] + e[i]) / 6.0;
    const double g = std::exp(-gamma * t1) * model.eval_constraint(x);
    est.step_modulus = std::max(est.step_modulus, std::abs(g - prev));
    if (g > est.value) {
      est.value = g;
      est.argmax_time = t1;
    }
    prev = g;
  }
  est.tail_bound = tail;
  est.error_bar = tail + est.step_modulus;
  return est;
}

}  // namespace rcis::oracle
