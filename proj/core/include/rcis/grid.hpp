#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace rcis {

using Vec = std::vector<double>;
using MultiIndex = std::vector<std::size_t>;

/// Uniform Cartesian grid over an axis-aligned box.
///
/// Nodes are stored row-major: the last axis varies fastest. The grid is the
/// computational box of the solvers; every query point is clamped to it
/// before interpolation, so the dynamics are never sampled outside.
class Grid {
 public:
  Grid() = default;

  /// Throws ConfigError unless lower_i < upper_i, counts_i >= 3 and the
  /// total node count fits in size_t.
  Grid(Vec lower, Vec upper, std::vector<std::size_t> counts);

  std::size_t dim() const { return lower_.size(); }
  std::size_t size() const { return size_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  const Vec& spacing() const { return spacing_; }
  const std::vector<std::size_t>& strides() const { return strides_; }

  /// Flat offsets of the 2^n corners of a cell relative to its lowest
  /// corner. Bit i of the corner id selects the upper node along axis i.
  const std::vector<std::size_t>& corner_offsets() const { return corners_; }

  /// lower + idx * spacing. Throws RangeError for an out-of-range index.
  Vec index_to_point(std::span<const std::size_t> idx) const;

  /// Unchecked coordinates of a flat node index.
  void node_point(std::size_t flat, std::span<double> out) const;
  Vec node_point(std::size_t flat) const;

  std::size_t flat_index(std::span<const std::size_t> idx) const;
  MultiIndex multi_index(std::size_t flat) const;

  /// Nearest node of a point (after clamping to the box).
  MultiIndex nearest_node(std::span<const double> point) const;

  void clamp(std::span<double> point) const;
  bool contains(std::span<const double> point) const;

  /// True when the node lies within `width` cells of a box face.
  bool in_boundary_band(std::size_t flat, std::size_t width = 2) const;

  /// Locates the cell holding `point` (clamped to the box) and writes the
  /// 2^n multilinear weights in corner_offsets() order. Returns the flat
  /// index of the lowest corner.
  std::size_t locate(std::span<const double> point, std::span<double> weights) const;

  /// Multilinear interpolation of nodal values; clamps the point first.
  double interpolate(std::span<const double> values, std::span<const double> point) const;

  /// Backward and forward difference quotients at a node. Missing neighbors
  /// at the faces come from the linear ghost node 2 V_edge - V_interior.
  std::pair<Vec, Vec> one_sided_gradients(std::span<const double> values,
                                          std::span<const std::size_t> idx) const;

  bool operator==(const Grid& other) const = default;

 private:
  Vec lower_;
  Vec upper_;
  std::vector<std::size_t> counts_;
  Vec spacing_;
  std::vector<std::size_t> strides_;
  std::vector<std::size_t> corners_;
  std::size_t size_ = 0;
};

}  // namespace rcis
