#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <unistd.h>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rcis/dynamics.hpp"
#include "rcis/grid.hpp"
#include "rcis/synthesis.hpp"
#include "rcis/value_field.hpp"

namespace rcis::test {

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline Vec random_point(std::mt19937_64& rng, const Vec& lo, const Vec& hi) {
  Vec x(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) x[i] = uniform(rng, lo[i], hi[i]);
  return x;
}

inline Vec random_values(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (auto& e : v) e = uniform(rng, lo, hi);
  return v;
}

inline ValueField make_field(const Grid& grid, std::vector<double> values, ValueKind kind = ValueKind::lower) {
  ValueField f{grid, std::move(values), 0.1, kind, "test", {}};
  return f;
}

inline ValueField sample_field(const Grid& grid, const std::function<double(const Vec&)>& fn) {
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) v[k] = fn(grid.node_point(k));
  return make_field(grid, std::move(v));
}

inline Grid square_grid(std::size_t n, double half = 1.0) { return Grid({-half, -half}, {half, half}, {n, n}); }

/// One-dimensional game x' = (u - d)^2 - x with U = D = [-1, 1]. The
/// Hamiltonian violates the Isaacs condition: for p > 0 the lower value
/// uses sup_d inf_u (u-d)^2 = 0 while the upper one gets inf_u sup_d = 1.
inline GameModel non_isaacs_1d() {
  GeneralDynamics dyn{[](std::span<const double> x, std::span<const double> u, std::span<const double> d,
                         std::span<double> out) { out[0] = (u[0] - d[0]) * (u[0] - d[0]) - x[0]; }};
  Constraint c{normalize_constraint([](std::span<const double> x) { return x[0] * x[0] - 0.25; }), 0.5,
               "normalized x^2 - 0.25"};
  return GameModel("non_isaacs_1d", 1, Box({-1.0}, {1.0}), Box({-1.0}, {1.0}), std::move(dyn), std::move(c));
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("rcis_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace rcis::test
