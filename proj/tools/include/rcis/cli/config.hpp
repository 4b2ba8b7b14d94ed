#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rcis/dynamics.hpp"
#include "rcis/grid.hpp"
#include "rcis/hj_solver.hpp"

namespace rcis::cli {

/// Explicit control-affine polynomial model. Gains are row-major
/// (state_dim x control_dim and state_dim x disturbance_dim). The raw
/// constraint is normalized with r / (1 + r^2).
struct PolynomialSpec {
  std::string name = "custom";
  std::size_t state_dim = 0;
  std::vector<std::vector<Monomial>> drift;
  std::vector<std::vector<Monomial>> control_gain;
  std::vector<std::vector<Monomial>> disturbance_gain;
  std::vector<Monomial> constraint;
  Box control_box;
  Box disturbance_box;

  bool operator==(const PolynomialSpec&) const = default;
};

struct ModelSpec {
  /// Registry name; ignored when `polynomial` is set.
  std::string builtin = "jet_engine";
  ModelParams params;
  std::optional<PolynomialSpec> polynomial;

  GameModel build() const;
  bool operator==(const ModelSpec&) const = default;
};

struct GridSpec {
  Vec lower;
  Vec upper;
  std::vector<std::size_t> counts;

  Grid build() const { return Grid(lower, upper, counts); }
  bool operator==(const GridSpec&) const = default;
};

enum class ValueSelection { lower, upper, both };

struct SolveSection {
  SolveConfig config;
  ValueSelection value = ValueSelection::both;

  bool operator==(const SolveSection&) const = default;
};

struct ExtractSection {
  double epsilon_set = 0.01;
  std::vector<double> levels;
  bool vtk = false;

  bool operator==(const ExtractSection&) const = default;
};

/// type: feedback | constant | sequence for controls,
///       worst | random | constant | sequence for disturbances.
struct PolicySpec {
  std::string type;
  std::vector<Vec> values;

  bool operator==(const PolicySpec&) const = default;
};

struct SimulateSection {
  Vec x0;
  double t_final = 10.0;
  double dt_sim = 0.01;
  PolicySpec control{"feedback", {}};
  PolicySpec disturbance{"worst", {}};
  std::uint64_t seed = 1;

  bool operator==(const SimulateSection&) const = default;
};

struct VerifySection {
  std::size_t trials = 100;
  double epsilon = 0.05;
  double t_final = 10.0;
  double dt_sim = 0.01;
  std::size_t margin = 2;
  double threshold = 0.99;
  std::uint64_t seed = 1;
  /// Nodes per axis of the coarse oracle-equivalence instance.
  std::size_t oracle_nodes = 21;
  double oracle_tol = 1e-14;

  bool operator==(const VerifySection&) const = default;
};

struct PathsSection {
  std::string out = "out";

  bool operator==(const PathsSection&) const = default;
};

struct RunConfig {
  std::optional<ModelSpec> model;
  std::optional<GridSpec> grid;
  SolveSection solve;
  ExtractSection extract;
  SimulateSection simulate;
  VerifySection verify;
  PathsSection paths;

  bool operator==(const RunConfig&) const = default;
};

/// Parses a JSON configuration. Unknown keys, wrong types and malformed
/// JSON raise ConfigError naming the key path or line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Serializes every section, defaults included.
std::string serialize_config(const RunConfig& config);

std::string_view to_string(ValueSelection value);
ValueSelection parse_value_selection(std::string_view text);

}  // namespace rcis::cli
