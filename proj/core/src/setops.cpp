#include "rcis/setops.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "rcis/errors.hpp"

namespace rcis {

std::size_t GridMask::count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

GridMask extract_sublevel(const ValueField& field, double epsilon_set) {
  if (!(epsilon_set >= 0.0)) throw ConfigError("extract: epsilon_set must be >= 0");
  field.validate();
  GridMask mask{field.grid, std::vector<std::uint8_t>(field.values.size()), epsilon_set};
  for (std::size_t k = 0; k < field.values.size(); ++k) mask.flags[k] = field.values[k] <= epsilon_set;
  return mask;
}

namespace {

// Crossing points are keyed by the edge they lie on: horizontal edges
// (i,j)-(i+1,j) get id 2*node, vertical edges (i,j)-(i,j+1) get 2*node+1,
// where node is the flat index of the lower endpoint.
struct Segment {
  std::size_t a, b;
};

}  // namespace

Contour2D marching_squares(const ValueField& field, double level) {
  const Grid& g = field.grid;
  if (g.dim() != 2) throw UnsupportedDimensionError("contour extraction requires a 2-D field");
  field.validate();
  const std::size_t nx = g.counts()[0], ny = g.counts()[1];
  const std::size_t sx = g.strides()[0], sy = g.strides()[1];
  const auto& v = field.values;

  std::unordered_map<std::size_t, Point2> vertex;
  auto crossing = [&](std::size_t n0, std::size_t n1, std::size_t edge_id) {
    if (vertex.count(edge_id)) return edge_id;
    const double a = v[n0], b = v[n1];
    const double t = (level - a) / (b - a);
    const Point2 p0{g.lower()[0] + static_cast<double>((n0 / sx) % nx) * g.spacing()[0],
                    g.lower()[1] + static_cast<double>((n0 / sy) % ny) * g.spacing()[1]};
    const Point2 p1{g.lower()[0] + static_cast<double>((n1 / sx) % nx) * g.spacing()[0],
                    g.lower()[1] + static_cast<double>((n1 / sy) % ny) * g.spacing()[1]};
    vertex[edge_id] = Point2{p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])};
    return edge_id;
  };

  std::vector<Segment> segments;
  for (std::size_t i = 0; i + 1 < nx; ++i) {
    for (std::size_t j = 0; j + 1 < ny; ++j) {
      // Corners counter-clockwise: c0=(i,j) c1=(i+1,j) c2=(i+1,j+1) c3=(i,j+1).
      const std::size_t c0 = i * sx + j * sy, c1 = c0 + sx, c2 = c0 + sx + sy, c3 = c0 + sy;
      const bool above[4] = {v[c0] >= level, v[c1] >= level, v[c2] >= level, v[c3] >= level};
      const int code = above[0] | above[1] << 1 | above[2] << 2 | above[3] << 3;
      if (code == 0 || code == 15) continue;
      // Edges: e0 bottom (c0-c1), e1 right (c1-c2), e2 top (c3-c2), e3 left (c0-c3).
      auto edge = [&](int e) -> std::size_t {
        switch (e) {
          case 0: return crossing(c0, c1, 2 * c0);
          case 1: return crossing(c1, c2, 2 * c1 + 1);
          case 2: return crossing(c3, c2, 2 * c3);
          default: return crossing(c0, c3, 2 * c0 + 1);
        }
      };
      auto add = [&](int e0, int e1) { segments.push_back({edge(e0), edge(e1)}); };
      switch (code) {
        case 1: case 14: add(3, 0); break;
        case 2: case 13: add(0, 1); break;
        case 3: case 12: add(3, 1); break;
        case 4: case 11: add(1, 2); break;
        case 6: case 9: add(0, 2); break;
        case 7: case 8: add(3, 2); break;
        case 5: case 10: {
          const double center = 0.25 * (v[c0] + v[c1] + v[c2] + v[c3]);
          const bool center_above = center >= level;
          // code 5: c0 and c2 above. If the center agrees with them the
          // above-region is connected through the middle.
          if ((code == 5) == center_above) {
            add(3, 2);
            add(0, 1);
          } else {
            add(3, 0);
            add(1, 2);
          }
          break;
        }
        default: break;
      }
    }
  }

  // Stitch segments through shared crossing ids.
  std::unordered_map<std::size_t, std::vector<std::size_t>> incident;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    incident[segments[s].a].push_back(s);
    incident[segments[s].b].push_back(s);
  }
  std::vector<bool> used(segments.size(), false);
  auto walk = [&](std::size_t start_seg, std::size_t from, std::vector<std::size_t>& chain) {
    std::size_t seg = start_seg, at = from;
    while (true) {
      used[seg] = true;
      const std::size_t to = segments[seg].a == at ? segments[seg].b : segments[seg].a;
      chain.push_back(to);
      std::size_t next = segments.size();
      for (std::size_t cand : incident[to]) {
        if (!used[cand]) {
          next = cand;
          break;
        }
      }
      if (next == segments.size()) return;
      seg = next;
      at = to;
    }
  };

  Contour2D out;
  out.level = level;
  // Open chains first start at crossings with a single incident segment, so
  // each open curve comes out in one piece; the rest are closed loops.
  std::vector<std::size_t> order(segments.size());
  for (std::size_t s = 0; s < segments.size(); ++s) order[s] = s;
  std::stable_partition(order.begin(), order.end(), [&](std::size_t s) {
    return incident[segments[s].a].size() == 1 || incident[segments[s].b].size() == 1;
  });
  for (std::size_t s : order) {
    if (used[s]) continue;
    std::size_t start = segments[s].a;
    if (incident[segments[s].a].size() != 1 && incident[segments[s].b].size() == 1) start = segments[s].b;
    std::vector<std::size_t> chain{start};
    walk(s, start, chain);
    std::vector<Point2> line;
    line.reserve(chain.size());
    for (std::size_t id : chain) line.push_back(vertex.at(id));
    out.polylines.push_back(std::move(line));
  }
  return out;
}

double polyline_length(const std::vector<Point2>& polyline) {
  double len = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    len += std::hypot(polyline[i][0] - polyline[i - 1][0], polyline[i][1] - polyline[i - 1][1]);
  }
  return len;
}

MaskComparison compare_masks(const GridMask& a, const GridMask& b) {
  if (!(a.grid == b.grid) || a.flags.size() != b.flags.size()) {
    throw ShapeError("compare: masks live on different grids");
  }
  MaskComparison c;
  for (std::size_t k = 0; k < a.flags.size(); ++k) {
    if (a.flags[k] && b.flags[k]) ++c.both;
    else if (a.flags[k]) ++c.only_a;
    else if (b.flags[k]) ++c.only_b;
  }
  const std::size_t uni = c.both + c.only_a + c.only_b;
  if (uni == 0) {
    c.jaccard = 1.0;
    c.symmetric_difference_fraction = 0.0;
  } else {
    c.jaccard = static_cast<double>(c.both) / static_cast<double>(uni);
    c.symmetric_difference_fraction = static_cast<double>(c.only_a + c.only_b) / static_cast<double>(uni);
  }
  return c;
}

std::vector<std::size_t> interior_nodes(const GridMask& mask, std::size_t margin) {
  const Grid& g = mask.grid;
  const std::size_t n = g.dim();
  std::vector<std::size_t> out;
  const auto width = static_cast<std::ptrdiff_t>(margin);
  std::vector<std::ptrdiff_t> offsets;
  {
    // All offsets in the (2 margin + 1)^n neighborhood.
    std::vector<std::ptrdiff_t> step(n, -width);
    while (true) {
      std::ptrdiff_t off = 0;
      for (std::size_t i = 0; i < n; ++i) off += step[i] * static_cast<std::ptrdiff_t>(g.strides()[i]);
      offsets.push_back(off);
      std::size_t i = 0;
      while (i < n && ++step[i] > width) step[i++] = -width;
      if (i == n) break;
    }
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!mask.flags[k] || g.in_boundary_band(k, margin)) continue;
    bool inside = true;
    for (std::ptrdiff_t off : offsets) {
      if (!mask.flags[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(k) + off)]) {
        inside = false;
        break;
      }
    }
    if (inside) out.push_back(k);
  }
  return out;
}

void write_mask_csv(std::ostream& os, const GridMask& mask) {
  const std::size_t n = mask.grid.dim();
  for (std::size_t i = 0; i < n; ++i) os << 'x' << (i + 1) << ',';
  os << "inside\n";
  Vec p(n);
  for (std::size_t k = 0; k < mask.grid.size(); ++k) {
    mask.grid.node_point(k, p);
    for (double x : p) os << format_scalar(x) << ',';
    os << int{mask.flags[k]} << '\n';
  }
}

GridMask read_mask_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("mask csv: empty input");
  std::size_t n = 0;
  {
    std::istringstream header(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(header, col, ',')) cols.push_back(col);
    if (!cols.empty() && !cols.back().empty() && cols.back().back() == '\r') cols.back().pop_back();
    if (cols.size() < 2 || cols.back() != "inside") throw IoError("mask csv: bad header");
    n = cols.size() - 1;
  }
  std::vector<Vec> points;
  std::vector<std::uint8_t> flags;
  std::vector<std::map<double, int>> axis_values(n);
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string cell;
    Vec p;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != n + 1) throw IoError("mask csv: line " + std::to_string(line_no) + ": wrong column count");
    try {
      for (std::size_t i = 0; i < n; ++i) {
        p.push_back(std::stod(cells[i]));
        axis_values[i][p.back()] = 0;
      }
      const int flag = std::stoi(cells[n]);
      if (flag != 0 && flag != 1) throw std::invalid_argument("flag");
      flags.push_back(static_cast<std::uint8_t>(flag));
    } catch (const std::exception&) {
      throw IoError("mask csv: line " + std::to_string(line_no) + ": bad number");
    }
    points.push_back(std::move(p));
  }
  Vec lower(n), upper(n);
  std::vector<std::size_t> counts(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (axis_values[i].size() < 3) throw IoError("mask csv: fewer than 3 distinct coordinates on an axis");
    lower[i] = axis_values[i].begin()->first;
    upper[i] = axis_values[i].rbegin()->first;
    counts[i] = axis_values[i].size();
  }
  GridMask mask;
  try {
    mask.grid = Grid(lower, upper, counts);
  } catch (const ConfigError& e) {
    throw IoError(std::string("mask csv: ") + e.what());
  }
  if (points.size() != mask.grid.size()) throw IoError("mask csv: node count does not match the grid");
  mask.flags.assign(mask.grid.size(), 0);
  for (std::size_t r = 0; r < points.size(); ++r) {
    const auto idx = mask.grid.nearest_node(points[r]);
    mask.flags[mask.grid.flat_index(idx)] = flags[r];
  }
  return mask;
}

void write_contour_csv(std::ostream& os, const std::vector<Contour2D>& contours) {
  os << "level,polyline,x,y\n";
  std::size_t id = 0;
  for (const auto& c : contours) {
    for (const auto& line : c.polylines) {
      for (const auto& p : line) {
        os << format_scalar(c.level) << ',' << id << ',' << format_scalar(p[0]) << ',' << format_scalar(p[1])
           << '\n';
      }
      ++id;
    }
  }
}

void write_comparison(std::ostream& os, const MaskComparison& c) {
  os << "only_a = " << c.only_a << '\n';
  os << "only_b = " << c.only_b << '\n';
  os << "both = " << c.both << '\n';
  os << "jaccard = " << format_scalar(c.jaccard) << '\n';
  os << "symmetric_difference_fraction = " << format_scalar(c.symmetric_difference_fraction) << '\n';
}

void write_vtk(std::ostream& os, const ValueField& field, const std::string& name) {
  const Grid& g = field.grid;
  if (g.dim() > 3) throw UnsupportedDimensionError("VTK export supports up to 3 dimensions");
  field.validate();
  std::size_t dims[3] = {1, 1, 1};
  double origin[3] = {0, 0, 0}, spacing[3] = {1, 1, 1};
  for (std::size_t i = 0; i < g.dim(); ++i) {
    dims[i] = g.counts()[i];
    origin[i] = g.lower()[i];
    spacing[i] = g.spacing()[i];
  }
  os << "# vtk DataFile Version 2.0\n";
  os << "value field " << to_string(field.kind) << " gamma " << format_scalar(field.gamma) << '\n';
  os << "ASCII\nDATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << dims[0] << ' ' << dims[1] << ' ' << dims[2] << '\n';
  os << "ORIGIN " << format_scalar(origin[0]) << ' ' << format_scalar(origin[1]) << ' '
     << format_scalar(origin[2]) << '\n';
  os << "SPACING " << format_scalar(spacing[0]) << ' ' << format_scalar(spacing[1]) << ' '
     << format_scalar(spacing[2]) << '\n';
  os << "POINT_DATA " << g.size() << '\n';
  os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  // VTK expects x fastest; our storage has the last axis fastest.
  std::vector<std::size_t> idx(g.dim(), 0);
  for (std::size_t z = 0; z < dims[2]; ++z) {
    for (std::size_t y = 0; y < dims[1]; ++y) {
      for (std::size_t x = 0; x < dims[0]; ++x) {
        const std::size_t c[3] = {x, y, z};
        std::size_t flat = 0;
        for (std::size_t i = 0; i < g.dim(); ++i) flat += c[i] * g.strides()[i];
        os << format_scalar(field.values[flat]) << '\n';
      }
    }
  }
}

}  // namespace rcis
