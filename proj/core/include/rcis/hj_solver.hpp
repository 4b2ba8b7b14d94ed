#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rcis/dynamics.hpp"
#include "rcis/grid.hpp"
#include "rcis/hamiltonian.hpp"
#include "rcis/value_field.hpp"

namespace rcis {

enum class Backend { fd, sl };
enum class FootPoint { euler, rk2 };

std::string_view to_string(Backend backend);
Backend parse_backend(std::string_view text);
std::string_view to_string(FootPoint scheme);
FootPoint parse_foot_point(std::string_view text);

struct SolveConfig {
  double gamma = 0.1;
  Backend backend = Backend::sl;
  /// 0 selects the automatic step: cfl / (gamma + sum alpha_i / dx_i) for
  /// the finite-difference backend, min dx / (2 max alpha) for
  /// semi-Lagrangian.
  double dt = 0.0;
  double cfl = 0.5;
  double tol = 1e-8;
  std::size_t max_iters = 200000;
  ValueKind kind = ValueKind::lower;
  HamiltonianOptions hamiltonian;
  FootPoint foot_point = FootPoint::euler;
  /// Finite differences only: scale the Lax-Friedrichs dissipation by
  /// per-node speed bounds instead of the global bounds.
  bool local_dissipation = true;
  /// Print a progress line to stderr every this many iterations (0: never).
  std::size_t progress_interval = 0;

  /// Throws ConfigError on a nonpositive gamma/tol/cfl or a negative dt.
  void validate() const;

  bool operator==(const SolveConfig&) const = default;
};

struct SolveReport {
  Backend backend = Backend::sl;
  ValueKind kind = ValueKind::lower;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  double tol = 0.0;
  bool converged = false;
  double dt = 0.0;
  /// e^{-gamma dt} for the semi-Lagrangian map; 0 for finite differences.
  double contraction_factor = 0.0;
  /// Geometric mean of r_{k+1}/r_k over the last (up to 100) iterations.
  double observed_contraction = 0.0;
  /// Smallest nodewise change V_{k+1} - V_k over all sweeps. Nonnegative
  /// when the iterates are nondecreasing.
  double min_increment = 0.0;
  Vec dissipation;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

struct SolveResult {
  ValueField field;
  SolveReport report;
};

/// Explicit pseudo-time marching of min{gamma V - H(x, DV), V - h} = 0 with
/// a Lax-Friedrichs numerical Hamiltonian, started from max(h, 0).
/// Non-convergence is reported through `converged`, never thrown.
SolveResult solve_fd(const GameModel& model, const Grid& grid, const SolveConfig& config);

/// Fixed-point iteration of the discrete dynamic programming principle
///   V(x) = max{ h(x), e^{-gamma dt} OPT_{u,d} I[V](x + dt f(x,u,d)) }
/// with OPT = max_d min_u (lower) or min_u max_d (upper). Started from
/// max(h, 0), so iterates are nondecreasing and stay inside [0, M].
SolveResult solve_sl(const GameModel& model, const Grid& grid, const SolveConfig& config);

/// Dispatches on config.backend.
SolveResult solve(const GameModel& model, const Grid& grid, const SolveConfig& config);

struct IsaacsGap {
  double max = 0.0;  ///< max of (V+ - V-) off the boundary band
  double min = 0.0;  ///< min of (V+ - V-) off the boundary band
};

/// Gap statistics excluding nodes within `band` cells of the box faces.
IsaacsGap isaacs_gap(const ValueField& lower, const ValueField& upper, std::size_t band = 2);

struct BothValues {
  SolveResult lower;
  SolveResult upper;
  IsaacsGap gap;
  /// Nodewise V- <= V+ + 1e-9 over all nodes.
  bool minimax_ok = false;
};

/// Solves both kinds in lockstep with identical discretization. Both
/// iterations run the same number of sweeps, which keeps the discrete
/// minimax ordering V- <= V+ exact at every sweep.
BothValues solve_both_values(const GameModel& model, const Grid& grid, const SolveConfig& config);

/// Plain-text report. Wall-clock time is omitted unless requested so the
/// file is reproducible byte for byte.
void write_solve_report(std::ostream& os, const SolveReport& report, bool include_timing = false);

}  // namespace rcis
