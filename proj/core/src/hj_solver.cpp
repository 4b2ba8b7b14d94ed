#include "rcis/hj_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <ostream>

#include "rcis/errors.hpp"

namespace rcis {

std::string_view to_string(Backend backend) { return backend == Backend::fd ? "fd" : "sl"; }

Backend parse_backend(std::string_view text) {
  if (text == "fd") return Backend::fd;
  if (text == "sl") return Backend::sl;
  throw ConfigError("unknown backend '" + std::string(text) + "' (expected fd|sl)");
}

std::string_view to_string(FootPoint scheme) { return scheme == FootPoint::euler ? "euler" : "rk2"; }

FootPoint parse_foot_point(std::string_view text) {
  if (text == "euler") return FootPoint::euler;
  if (text == "rk2") return FootPoint::rk2;
  throw ConfigError("unknown foot point scheme '" + std::string(text) + "' (expected euler|rk2)");
}

void SolveConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("solve: gamma must be positive");
  if (!(tol > 0.0)) throw ConfigError("solve: tol must be positive");
  if (!(cfl > 0.0) || cfl > 1.0) throw ConfigError("solve: cfl must lie in (0, 1]");
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw ConfigError("solve: dt must be >= 0 (0 = auto)");
  if (max_iters == 0) throw ConfigError("solve: max_iters must be at least 1");
}

namespace {

using Clock = std::chrono::steady_clock;

struct SweepStats {
  double residual;       ///< max |V_{k+1} - V_k|
  double min_increment;  ///< min (V_{k+1} - V_k)
};

std::vector<double> obstacle(const GameModel& model, const Grid& grid) {
  std::vector<double> h(grid.size());
  Vec x(grid.dim());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid.node_point(k, x);
    h[k] = model.eval_constraint(x);
    if (!std::isfinite(h[k])) throw DomainError("constraint is not finite at a grid node");
  }
  return h;
}

void check_inputs(const GameModel& model, const Grid& grid, const SolveConfig& config) {
  config.validate();
  if (grid.dim() != model.state_dim()) {
    throw ShapeError("grid dimension " + std::to_string(grid.dim()) + " does not match state dimension " +
                     std::to_string(model.state_dim()));
  }
}

/// One Jacobi sweep of the discrete dynamic programming map. Foot-point
/// stencils do not depend on V, so they are computed once.
class SemiLagrangianOperator {
 public:
  SemiLagrangianOperator(const GameModel& model, const Grid& grid, const SolveConfig& config,
                         std::vector<std::string>& warnings)
      : evaluator_(model, config.hamiltonian), h_(obstacle(model, grid)) {
    alpha_ = evaluator_.dissipation_bounds(grid, &warnings);
    dt_ = config.dt;
    if (dt_ == 0.0) {
      const double dx = *std::min_element(grid.spacing().begin(), grid.spacing().end());
      dt_ = dx / (2.0 * *std::max_element(alpha_.begin(), alpha_.end()));
    }
    beta_ = std::exp(-config.gamma * dt_);
    if (!(beta_ < 1.0)) throw ConfigError("solve: e^{-gamma dt} must be < 1 (dt too small)");

    const auto& us = evaluator_.control_samples();
    const auto& ds = evaluator_.disturbance_samples();
    nu_ = us.size();
    nd_ = ds.size();
    pairs_ = nu_ * nd_;
    nodes_ = grid.size();
    offsets_ = grid.corner_offsets();
    corners_ = offsets_.size();
    base_.resize(nodes_ * pairs_);
    weights_.resize(nodes_ * pairs_ * corners_);

    const std::size_t n = grid.dim();
    Vec x(n), f(n), mid(n), foot(n);
    for (std::size_t k = 0; k < nodes_; ++k) {
      grid.node_point(k, x);
      for (std::size_t d = 0; d < nd_; ++d) {
        for (std::size_t u = 0; u < nu_; ++u) {
          model.eval_dynamics_unchecked(x, us[u], ds[d], f);
          if (config.foot_point == FootPoint::rk2) {
            for (std::size_t i = 0; i < n; ++i) mid[i] = x[i] + 0.5 * dt_ * f[i];
            grid.clamp(mid);
            model.eval_dynamics_unchecked(mid, us[u], ds[d], f);
          }
          for (std::size_t i = 0; i < n; ++i) foot[i] = x[i] + dt_ * f[i];
          const std::size_t q = k * pairs_ + d * nu_ + u;
          base_[q] = grid.locate(foot, std::span<double>(weights_.data() + q * corners_, corners_));
        }
      }
    }
  }

  double dt() const { return dt_; }
  double beta() const { return beta_; }
  const Vec& alpha() const { return alpha_; }
  const std::vector<double>& h() const { return h_; }

  SweepStats apply(ValueKind kind, std::span<const double> cur, std::span<double> next) const {
    switch (corners_) {
      case 2: return sweep<2>(kind, cur, next);
      case 4: return sweep<4>(kind, cur, next);
      case 8: return sweep<8>(kind, cur, next);
      default: return sweep<0>(kind, cur, next);
    }
  }

 private:
  template <std::size_t C>
  SweepStats sweep(ValueKind kind, std::span<const double> cur, std::span<double> next) const {
    const std::size_t corners = C ? C : corners_;
    const double* v = cur.data();
    const std::size_t* off = offsets_.data();
    const bool lower = kind == ValueKind::lower;
    auto value_at = [&](std::size_t q) {
      const double* w = weights_.data() + q * corners;
      const double* base = v + base_[q];
      double s = 0.0;
      for (std::size_t c = 0; c < corners; ++c) s += w[c] * base[off[c]];
      return s;
    };
    const auto count = static_cast<std::ptrdiff_t>(nodes_);
    double residual = 0.0, lowest = std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(max : residual) reduction(min : lowest)
    for (std::ptrdiff_t sk = 0; sk < count; ++sk) {
      const auto k = static_cast<std::size_t>(sk);
      const std::size_t q0 = k * pairs_;
      double opt;
      if (lower) {
        opt = -std::numeric_limits<double>::infinity();
        for (std::size_t d = 0; d < nd_; ++d) {
          double inner = std::numeric_limits<double>::infinity();
          for (std::size_t u = 0; u < nu_; ++u) inner = std::min(inner, value_at(q0 + d * nu_ + u));
          opt = std::max(opt, inner);
        }
      } else {
        opt = std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < nu_; ++u) {
          double inner = -std::numeric_limits<double>::infinity();
          for (std::size_t d = 0; d < nd_; ++d) inner = std::max(inner, value_at(q0 + d * nu_ + u));
          opt = std::min(opt, inner);
        }
      }
      const double updated = std::max(h_[k], beta_ * opt);
      next[k] = updated;
      residual = std::max(residual, std::abs(updated - v[k]));
      lowest = std::min(lowest, updated - v[k]);
    }
    return {residual, lowest};
  }

  HamiltonianEvaluator evaluator_;
  std::vector<double> h_;
  Vec alpha_;
  double dt_ = 0.0;
  double beta_ = 0.0;
  std::size_t nu_ = 0, nd_ = 0, pairs_ = 0, nodes_ = 0, corners_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> base_;
  std::vector<double> weights_;
};

/// Per-node bounds safety * max |f_i(x,u,d)| over the action samples (box
/// vertices for affine dynamics). Never larger than the global bounds.
std::vector<double> local_dissipation(const GameModel& model, const Grid& grid, double safety) {
  const std::size_t n = grid.dim();
  const bool affine = model.is_affine();
  const auto us = model.control_box().samples(affine ? 2 : 5);
  const auto ds = model.disturbance_box().samples(affine ? 2 : 5);
  std::vector<double> out(grid.size() * n, 0.0);
  Vec x(n), f(n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid.node_point(k, x);
    for (const auto& d : ds) {
      for (const auto& u : us) {
        model.eval_dynamics_unchecked(x, u, d, f);
        for (std::size_t i = 0; i < n; ++i) out[k * n + i] = std::max(out[k * n + i], safety * std::abs(f[i]));
      }
    }
  }
  return out;
}

/// One explicit pseudo-time step of the obstacle problem with the
/// Lax-Friedrichs flux H((p- + p+)/2) + sum_i alpha_i (p+_i - p-_i)/2.
/// The step reads V_t = H - gamma V, so the dissipation enters with a plus
/// sign to act as diffusion.
class FiniteDifferenceOperator {
 public:
  FiniteDifferenceOperator(const GameModel& model, const Grid& grid, const SolveConfig& config,
                           std::vector<std::string>& warnings)
      : evaluator_(model, config.hamiltonian),
        table_(evaluator_, grid),
        h_(obstacle(model, grid)),
        grid_(grid),
        gamma_(config.gamma) {
    alpha_ = evaluator_.dissipation_bounds(grid, &warnings);
    local_ = config.local_dissipation;
    if (local_) local_alpha_ = local_dissipation(model, grid, evaluator_.safety_factor());
    double rate = gamma_;
    for (std::size_t i = 0; i < grid.dim(); ++i) rate += alpha_[i] / grid.spacing()[i];
    if (config.dt == 0.0) {
      dt_ = config.cfl / rate;
    } else {
      dt_ = config.dt;
      if (dt_ * rate > 1.0 || dt_ > 1.0) {
        throw ConfigError("solve: explicit dt = " + std::to_string(dt_) +
                          " violates the CFL bound dt <= " + std::to_string(std::min(1.0, 1.0 / rate)));
      }
    }
  }

  double dt() const { return dt_; }
  const Vec& alpha() const { return alpha_; }
  const std::vector<double>& h() const { return h_; }

  SweepStats apply(ValueKind kind, std::span<const double> cur, std::span<double> next) const {
    const std::size_t n = grid_.dim();
    const auto& counts = grid_.counts();
    const auto& strides = grid_.strides();
    const auto& dx = grid_.spacing();
    const double* v = cur.data();
    const auto count = static_cast<std::ptrdiff_t>(grid_.size());
    double residual = 0.0, lowest = std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(max : residual) reduction(min : lowest)
    for (std::ptrdiff_t sk = 0; sk < count; ++sk) {
      const auto k = static_cast<std::size_t>(sk);
      double pmid[16];
      double dissipation = 0.0;
      const double vk = v[k];
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pos = (k / strides[i]) % counts[i];
        const std::size_t s = strides[i];
        // Constant extension across faces, matching the clamped SL foot points.
        double vm, vp;
        if (pos == 0) {
          vp = v[k + s];
          vm = vk;
        } else if (pos + 1 == counts[i]) {
          vm = v[k - s];
          vp = vk;
        } else {
          vm = v[k - s];
          vp = v[k + s];
        }
        const double back = (vk - vm) / dx[i];
        const double fwd = (vp - vk) / dx[i];
        pmid[i] = 0.5 * (back + fwd);
        const double a = local_ ? local_alpha_[k * n + i] : alpha_[i];
        dissipation += a * 0.5 * (fwd - back);
      }
      const double numerical_h = table_.eval(kind, k, std::span<const double>(pmid, n)) + dissipation;
      const double updated = vk - dt_ * std::min(gamma_ * vk - numerical_h, vk - h_[k]);
      next[k] = updated;
      residual = std::max(residual, std::abs(updated - vk));
      lowest = std::min(lowest, updated - vk);
    }
    return {residual, lowest};
  }

 private:
  HamiltonianEvaluator evaluator_;
  HamiltonianTable table_;
  std::vector<double> h_;
  const Grid& grid_;
  double gamma_;
  Vec alpha_;
  bool local_ = false;
  std::vector<double> local_alpha_;
  double dt_ = 0.0;
};

struct Run {
  ValueKind kind;
  std::vector<double> current;
  std::vector<double> next;
  std::vector<double> history;
  double min_increment = std::numeric_limits<double>::infinity();
};

double observed_contraction(const std::vector<double>& history) {
  const std::size_t n = history.size();
  if (n < 2) return 0.0;
  const std::size_t first = n > 101 ? n - 101 : 0;
  double log_sum = 0.0;
  std::size_t terms = 0;
  for (std::size_t k = first + 1; k < n; ++k) {
    if (history[k - 1] > 0.0 && history[k] > 0.0) {
      log_sum += std::log(history[k] / history[k - 1]);
      ++terms;
    }
  }
  return terms ? std::exp(log_sum / static_cast<double>(terms)) : 0.0;
}

/// Runs every kind in lockstep until all residuals are <= tol or max_iters
/// sweeps were taken.
template <typename Operator>
std::size_t iterate(const Operator& op, std::vector<Run>& runs, const SolveConfig& config,
                    std::string_view label) {
  std::size_t k = 0;
  auto done = [&] {
    for (const auto& r : runs) {
      if (r.history.empty() || r.history.back() > config.tol) return false;
    }
    return true;
  };
  while (k < config.max_iters && !done()) {
    for (auto& r : runs) {
      const SweepStats st = op.apply(r.kind, r.current, r.next);
      r.history.push_back(st.residual);
      r.min_increment = std::min(r.min_increment, st.min_increment);
      r.current.swap(r.next);
    }
    ++k;
    if (config.progress_interval && k % config.progress_interval == 0) {
      std::cerr << label << " iter " << k;
      for (const auto& r : runs) std::cerr << ' ' << to_string(r.kind) << " residual " << r.history.back();
      std::cerr << '\n';
    }
  }
  return k;
}

template <typename Operator>
std::vector<SolveResult> run_backend(const GameModel& model, const Grid& grid, const SolveConfig& config,
                                     std::vector<ValueKind> kinds) {
  const auto start = Clock::now();
  std::vector<std::string> warnings;
  const Operator op(model, grid, config, warnings);

  std::vector<double> initial(op.h());
  for (double& v : initial) v = std::max(v, 0.0);
  std::vector<Run> runs;
  for (ValueKind kind : kinds) runs.push_back(Run{kind, initial, std::vector<double>(initial.size()), {}});

  const std::string_view label = to_string(config.backend);
  const std::size_t iterations = iterate(op, runs, config, label);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();

  std::vector<SolveResult> results;
  for (auto& r : runs) {
    SolveResult res;
    res.field.grid = grid;
    res.field.values = std::move(r.current);
    res.field.gamma = config.gamma;
    res.field.kind = r.kind;
    res.field.backend = std::string(label);
    SolveReport& rep = res.report;
    rep.backend = config.backend;
    rep.kind = r.kind;
    rep.iterations = iterations;
    rep.final_residual = r.history.empty() ? std::numeric_limits<double>::infinity() : r.history.back();
    rep.tol = config.tol;
    rep.converged = rep.final_residual <= config.tol;
    rep.dt = op.dt();
    if constexpr (std::is_same_v<Operator, SemiLagrangianOperator>) rep.contraction_factor = op.beta();
    rep.observed_contraction = observed_contraction(r.history);
    rep.min_increment = r.min_increment;
    rep.dissipation = op.alpha();
    rep.wall_seconds = seconds;
    rep.warnings = warnings;
    res.field.residual_history = std::move(r.history);
    results.push_back(std::move(res));
  }
  return results;
}

std::vector<SolveResult> run(const GameModel& model, const Grid& grid, const SolveConfig& config,
                             std::vector<ValueKind> kinds) {
  check_inputs(model, grid, config);
  if (config.backend == Backend::sl) {
    return run_backend<SemiLagrangianOperator>(model, grid, config, std::move(kinds));
  }
  return run_backend<FiniteDifferenceOperator>(model, grid, config, std::move(kinds));
}

}  // namespace

SolveResult solve_fd(const GameModel& model, const Grid& grid, const SolveConfig& config) {
  SolveConfig c = config;
  c.backend = Backend::fd;
  return std::move(run(model, grid, c, {c.kind}).front());
}

SolveResult solve_sl(const GameModel& model, const Grid& grid, const SolveConfig& config) {
  SolveConfig c = config;
  c.backend = Backend::sl;
  return std::move(run(model, grid, c, {c.kind}).front());
}

SolveResult solve(const GameModel& model, const Grid& grid, const SolveConfig& config) {
  return config.backend == Backend::fd ? solve_fd(model, grid, config) : solve_sl(model, grid, config);
}

IsaacsGap isaacs_gap(const ValueField& lower, const ValueField& upper, std::size_t band) {
  if (!(lower.grid == upper.grid)) throw ShapeError("isaacs gap: fields live on different grids");
  IsaacsGap gap{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  bool any = false;
  for (std::size_t k = 0; k < lower.grid.size(); ++k) {
    if (lower.grid.in_boundary_band(k, band)) continue;
    const double diff = upper.values[k] - lower.values[k];
    gap.max = std::max(gap.max, diff);
    gap.min = std::min(gap.min, diff);
    any = true;
  }
  if (!any) gap = IsaacsGap{0.0, 0.0};
  return gap;
}

BothValues solve_both_values(const GameModel& model, const Grid& grid, const SolveConfig& config) {
  auto results = run(model, grid, config, {ValueKind::lower, ValueKind::upper});
  BothValues out;
  out.lower = std::move(results[0]);
  out.upper = std::move(results[1]);
  out.gap = isaacs_gap(out.lower.field, out.upper.field);
  out.minimax_ok = true;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (out.lower.field.values[k] > out.upper.field.values[k] + 1e-9) out.minimax_ok = false;
  }
  return out;
}

void write_solve_report(std::ostream& os, const SolveReport& r, bool include_timing) {
  os << "backend = " << to_string(r.backend) << '\n';
  os << "kind = " << to_string(r.kind) << '\n';
  os << "converged = " << (r.converged ? "true" : "false") << '\n';
  os << "iterations = " << r.iterations << '\n';
  os << "final_residual = " << format_scalar(r.final_residual) << '\n';
  os << "tol = " << format_scalar(r.tol) << '\n';
  os << "dt = " << format_scalar(r.dt) << '\n';
  os << "contraction_factor = " << format_scalar(r.contraction_factor) << '\n';
  os << "observed_contraction = " << format_scalar(r.observed_contraction) << '\n';
  os << "min_increment = " << format_scalar(r.min_increment) << '\n';
  os << "dissipation =";
  for (double a : r.dissipation) os << ' ' << format_scalar(a);
  os << '\n';
  if (include_timing) os << "wall_seconds = " << format_scalar(r.wall_seconds) << '\n';
  for (const auto& w : r.warnings) os << "warning = " << w << '\n';
}

}  // namespace rcis
