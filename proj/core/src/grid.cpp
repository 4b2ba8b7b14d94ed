#include "rcis/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rcis/errors.hpp"

namespace rcis {

Grid::Grid(Vec lower, Vec upper, std::vector<std::size_t> counts)
    : lower_(std::move(lower)), upper_(std::move(upper)), counts_(std::move(counts)) {
  const std::size_t n = lower_.size();
  if (n == 0) throw ConfigError("grid: dimension must be positive");
  if (upper_.size() != n || counts_.size() != n) {
    throw ConfigError("grid: lower, upper and counts must have the same length");
  }
  spacing_.resize(n);
  strides_.assign(n, 1);
  size_ = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
      throw ConfigError("grid: axis " + std::to_string(i) + " needs finite lower < upper");
    }
    if (counts_[i] < 3) {
      throw ConfigError("grid: axis " + std::to_string(i) + " needs at least 3 points");
    }
    if (size_ > std::numeric_limits<std::size_t>::max() / counts_[i]) {
      throw ConfigError("grid: total point count overflows the address range");
    }
    size_ *= counts_[i];
    spacing_[i] = (upper_[i] - lower_[i]) / static_cast<double>(counts_[i] - 1);
  }
  for (std::size_t i = n - 1; i-- > 0;) strides_[i] = strides_[i + 1] * counts_[i + 1];

  corners_.assign(std::size_t{1} << n, 0);
  for (std::size_t c = 0; c < corners_.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      if (c & (std::size_t{1} << i)) corners_[c] += strides_[i];
    }
  }
}

Vec Grid::index_to_point(std::span<const std::size_t> idx) const {
  if (idx.size() != dim()) throw RangeError("grid: index has wrong dimension");
  Vec p(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    if (idx[i] >= counts_[i]) {
      throw RangeError("grid: index " + std::to_string(idx[i]) + " out of range on axis " +
                       std::to_string(i));
    }
    p[i] = lower_[i] + static_cast<double>(idx[i]) * spacing_[i];
  }
  return p;
}

void Grid::node_point(std::size_t flat, std::span<double> out) const {
  for (std::size_t i = 0; i < dim(); ++i) {
    const std::size_t k = (flat / strides_[i]) % counts_[i];
    out[i] = lower_[i] + static_cast<double>(k) * spacing_[i];
  }
}

Vec Grid::node_point(std::size_t flat) const {
  Vec p(dim());
  node_point(flat, p);
  return p;
}

std::size_t Grid::flat_index(std::span<const std::size_t> idx) const {
  if (idx.size() != dim()) throw RangeError("grid: index has wrong dimension");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (idx[i] >= counts_[i]) throw RangeError("grid: index out of range");
    flat += idx[i] * strides_[i];
  }
  return flat;
}

MultiIndex Grid::multi_index(std::size_t flat) const {
  if (flat >= size_) throw RangeError("grid: flat index out of range");
  MultiIndex idx(dim());
  for (std::size_t i = 0; i < dim(); ++i) idx[i] = (flat / strides_[i]) % counts_[i];
  return idx;
}

MultiIndex Grid::nearest_node(std::span<const double> point) const {
  if (point.size() != dim()) throw ShapeError("grid: point has wrong dimension");
  MultiIndex idx(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!std::isfinite(point[i])) throw DomainError("grid: non-finite point");
    const double s = std::clamp((point[i] - lower_[i]) / spacing_[i], 0.0,
                                static_cast<double>(counts_[i] - 1));
    idx[i] = static_cast<std::size_t>(std::llround(s));
  }
  return idx;
}

void Grid::clamp(std::span<double> point) const {
  for (std::size_t i = 0; i < dim(); ++i) point[i] = std::clamp(point[i], lower_[i], upper_[i]);
}

bool Grid::contains(std::span<const double> point) const {
  for (std::size_t i = 0; i < dim(); ++i) {
    if (point[i] < lower_[i] || point[i] > upper_[i]) return false;
  }
  return true;
}

bool Grid::in_boundary_band(std::size_t flat, std::size_t width) const {
  for (std::size_t i = 0; i < dim(); ++i) {
    const std::size_t k = (flat / strides_[i]) % counts_[i];
    if (k < width || k + width >= counts_[i]) return true;
  }
  return false;
}

std::size_t Grid::locate(std::span<const double> point, std::span<double> weights) const {
  const std::size_t n = dim();
  // Per-axis fractional offsets; n is small so a fixed buffer suffices.
  double frac[16];
  if (n > 16) throw UnsupportedDimensionError("grid: at most 16 dimensions");
  std::size_t base = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::clamp(point[i], lower_[i], upper_[i]);
    const double s = (x - lower_[i]) / spacing_[i];
    std::size_t k = static_cast<std::size_t>(std::floor(s));
    if (k > counts_[i] - 2) k = counts_[i] - 2;
    frac[i] = std::clamp(s - static_cast<double>(k), 0.0, 1.0);
    base += k * strides_[i];
  }
  for (std::size_t c = 0; c < corners_.size(); ++c) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) w *= (c & (std::size_t{1} << i)) ? frac[i] : 1.0 - frac[i];
    weights[c] = w;
  }
  return base;
}

double Grid::interpolate(std::span<const double> values, std::span<const double> point) const {
  if (point.size() != dim()) throw ShapeError("grid: point has wrong dimension");
  for (double x : point) {
    if (!std::isfinite(x)) throw DomainError("grid: cannot interpolate at a non-finite point");
  }
  double weights[1u << 8];
  std::vector<double> heap;
  std::span<double> w;
  if (corners_.size() <= std::size(weights)) {
    w = std::span<double>(weights, corners_.size());
  } else {
    heap.resize(corners_.size());
    w = heap;
  }
  const std::size_t base = locate(point, w);
  double v = 0.0;
  for (std::size_t c = 0; c < corners_.size(); ++c) v += w[c] * values[base + corners_[c]];
  return v;
}

std::pair<Vec, Vec> Grid::one_sided_gradients(std::span<const double> values,
                                              std::span<const std::size_t> idx) const {
  const std::size_t flat = flat_index(idx);
  Vec back(dim()), fwd(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    const double v = values[flat];
    const std::size_t s = strides_[i];
    double vm, vp;
    if (idx[i] == 0) {
      vp = values[flat + s];
      vm = 2.0 * v - vp;
    } else if (idx[i] + 1 == counts_[i]) {
      vm = values[flat - s];
      vp = 2.0 * v - vm;
    } else {
      vm = values[flat - s];
      vp = values[flat + s];
    }
    back[i] = (v - vm) / spacing_[i];
    fwd[i] = (vp - v) / spacing_[i];
  }
  return {back, fwd};
}

}  // namespace rcis
