#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rcis/grid.hpp"

namespace rcis {

/// Which game a value function belongs to. `lower` pairs with the sup-inf
/// Hamiltonian (disturbance optimizes outside), `upper` with inf-sup.
enum class ValueKind { lower, upper };

std::string_view to_string(ValueKind kind);
ValueKind parse_value_kind(std::string_view text);

/// Nodal value function on a grid together with its solve metadata.
struct ValueField {
  Grid grid;
  std::vector<double> values;
  double gamma = 0.1;
  ValueKind kind = ValueKind::lower;
  std::string backend;
  std::vector<double> residual_history;

  /// Throws ShapeError/DomainError when the values do not match the grid or
  /// contain a non-finite entry.
  void validate() const;

  double min() const;
  double max() const;
};

/// Multilinear interpolation; points outside the box are clamped first.
/// Throws DomainError for a non-finite point.
double interpolate(const ValueField& field, std::span<const double> point);

std::pair<Vec, Vec> one_sided_gradients(const ValueField& field, std::span<const std::size_t> idx);

// Text format: `key = value` header lines (dim, lower, upper, counts, gamma,
// kind), a blank line, then one value per line in row-major order. Scalars
// use 17 significant digits.
void write_value_field(std::ostream& os, const ValueField& field);
ValueField read_value_field(std::istream& is);
void save_value_field(const std::string& path, const ValueField& field);
ValueField load_value_field(const std::string& path);

/// printf("%.17g") formatting used by every text output of the library.
std::string format_scalar(double value);

}  // namespace rcis
