#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rcis/grid.hpp"
#include "rcis/value_field.hpp"

namespace rcis {

/// Node flags of a sublevel set {V <= threshold}.
struct GridMask {
  Grid grid;
  std::vector<std::uint8_t> flags;
  double threshold = 0.0;

  std::size_t count() const;
  bool operator==(const GridMask&) const = default;
};

/// Flags every node with V <= epsilon_set. Throws ConfigError for a
/// negative threshold.
GridMask extract_sublevel(const ValueField& field, double epsilon_set);

using Point2 = std::array<double, 2>;

struct Contour2D {
  std::vector<std::vector<Point2>> polylines;
  double level = 0.0;
};

/// 16-case marching squares with linear edge interpolation. Ambiguous
/// saddles are split by the cell-center average. Segments are stitched into
/// polylines through their shared edge crossings; closed curves repeat the
/// first vertex at the end. Throws UnsupportedDimensionError unless dim == 2.
Contour2D marching_squares(const ValueField& field, double level);

double polyline_length(const std::vector<Point2>& polyline);

struct MaskComparison {
  std::size_t only_a = 0;
  std::size_t only_b = 0;
  std::size_t both = 0;
  double jaccard = 1.0;
  /// |A xor B| / |A or B|, 0 when both masks are empty.
  double symmetric_difference_fraction = 0.0;
};

/// Throws ShapeError when the masks live on different grids.
MaskComparison compare_masks(const GridMask& a, const GridMask& b);

/// Nodes whose whole Chebyshev neighborhood of radius `margin` lies inside
/// the mask (and inside the grid).
std::vector<std::size_t> interior_nodes(const GridMask& mask, std::size_t margin = 2);

// Exports. Mask CSV: x1..xn,inside. Contour CSV: polyline,x,y.
void write_mask_csv(std::ostream& os, const GridMask& mask);
/// Reads a mask CSV; the grid is reconstructed from the node coordinates.
GridMask read_mask_csv(std::istream& is);
void write_contour_csv(std::ostream& os, const std::vector<Contour2D>& contours);
void write_comparison(std::ostream& os, const MaskComparison& cmp);
/// Legacy VTK 2.0 ASCII structured points.
void write_vtk(std::ostream& os, const ValueField& field, const std::string& name = "value");

}  // namespace rcis
