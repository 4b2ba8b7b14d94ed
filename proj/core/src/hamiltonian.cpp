#include "rcis/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcis/errors.hpp"

namespace rcis {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// p . f1 + sum_j [c_j center_j - |c_j| radius_j] + sum_k [e_k center_k + |e_k| radius_k]
// with c = p^T f2, e = p^T f3. Gains are row-major n x m and n x l.
double affine_closed_form(std::span<const double> p, std::span<const double> drift,
                          std::span<const double> cgain, std::span<const double> dgain,
                          std::span<const double> u_center, std::span<const double> u_radius,
                          std::span<const double> d_center, std::span<const double> d_radius) {
  const std::size_t n = p.size(), m = u_center.size(), l = d_center.size();
  double h = dot(p, drift);
  for (std::size_t j = 0; j < m; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += p[i] * cgain[i * m + j];
    h += c * u_center[j] - std::abs(c) * u_radius[j];
  }
  for (std::size_t k = 0; k < l; ++k) {
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e += p[i] * dgain[i * l + k];
    h += e * d_center[k] + std::abs(e) * d_radius[k];
  }
  return h;
}

// values[d * nu + u] holds p . f for the (d, u) sample pair.
double minimax(ValueKind kind, std::span<const double> values, std::size_t nd, std::size_t nu) {
  if (kind == ValueKind::lower) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < nd; ++d) {
      double inner = std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u < nu; ++u) inner = std::min(inner, values[d * nu + u]);
      best = std::max(best, inner);
    }
    return best;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < nu; ++u) {
    double inner = -std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < nd; ++d) inner = std::max(inner, values[d * nu + u]);
    best = std::min(best, inner);
  }
  return best;
}

void centers_and_radii(const Box& box, Vec& center, Vec& radius) {
  center.resize(box.dim());
  radius.resize(box.dim());
  for (std::size_t i = 0; i < box.dim(); ++i) {
    center[i] = box.center(i);
    radius[i] = box.radius(i);
  }
}

}  // namespace

HamiltonianEvaluator::HamiltonianEvaluator(const GameModel& model, HamiltonianOptions options)
    : model_(&model), safety_factor_(options.safety_factor) {
  mode_ = options.mode.value_or(model.is_affine() ? HamiltonianMode::analytic_affine
                                                  : HamiltonianMode::sampled);
  if (mode_ == HamiltonianMode::analytic_affine && !model.is_affine()) {
    throw ConfigError("hamiltonian: analytic mode requires control-affine dynamics");
  }
  if (!(safety_factor_ >= 1.0)) throw ConfigError("hamiltonian: safety factor must be >= 1");
  const std::size_t fallback = model.is_affine() ? 2 : 5;
  const std::size_t nu = options.control_samples ? options.control_samples : fallback;
  const std::size_t nd = options.disturbance_samples ? options.disturbance_samples : fallback;
  controls_ = model.control_box().samples(nu);
  disturbances_ = model.disturbance_box().samples(nd);
}

double HamiltonianEvaluator::sampled(ValueKind kind, std::span<const double> x,
                                     std::span<const double> p) const {
  const std::size_t nu = controls_.size(), nd = disturbances_.size();
  std::vector<double> values(nu * nd);
  Vec f(model_->state_dim());
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t u = 0; u < nu; ++u) {
      model_->eval_dynamics_unchecked(x, controls_[u], disturbances_[d], f);
      values[d * nu + u] = dot(p, f);
    }
  }
  return minimax(kind, values, nd, nu);
}

double HamiltonianEvaluator::lower(std::span<const double> x, std::span<const double> p) const {
  if (mode_ == HamiltonianMode::sampled) return sampled(ValueKind::lower, x, p);
  const auto& a = model_->affine();
  Vec uc, ur, dc, dr;
  centers_and_radii(model_->control_box(), uc, ur);
  centers_and_radii(model_->disturbance_box(), dc, dr);
  return affine_closed_form(p, a.drift.evaluate(x), a.control_gain.evaluate(x),
                            a.disturbance_gain.evaluate(x), uc, ur, dc, dr);
}

double HamiltonianEvaluator::upper(std::span<const double> x, std::span<const double> p) const {
  if (mode_ == HamiltonianMode::sampled) return sampled(ValueKind::upper, x, p);
  // Decoupled boxes: inf-sup and sup-inf coincide term by term.
  return lower(x, p);
}

Vec HamiltonianEvaluator::dissipation_bounds(const Grid& grid, std::vector<std::string>* warnings) const {
  const std::size_t n = model_->state_dim();
  if (grid.dim() != n) throw ShapeError("hamiltonian: grid dimension does not match the model");
  const bool affine = model_->is_affine();
  const auto controls = affine ? model_->control_box().samples(2) : controls_;
  const auto disturbances = affine ? model_->disturbance_box().samples(2) : disturbances_;
  Vec alpha(n, 0.0), x(n), f(n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid.node_point(k, x);
    for (const auto& d : disturbances) {
      for (const auto& u : controls) {
        model_->eval_dynamics_unchecked(x, u, d, f);
        for (std::size_t i = 0; i < n; ++i) alpha[i] = std::max(alpha[i], std::abs(f[i]));
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    alpha[i] *= safety_factor_;
    if (!(alpha[i] > 0.0)) {
      alpha[i] = std::numeric_limits<double>::epsilon();
      if (warnings) {
        warnings->push_back("dynamics axis " + std::to_string(i) +
                            " is identically zero on the grid; dissipation set to machine epsilon");
      }
    }
  }
  return alpha;
}

HamiltonianTable::HamiltonianTable(const HamiltonianEvaluator& evaluator, const Grid& grid)
    : mode_(evaluator.mode()) {
  const GameModel& model = evaluator.model();
  n_ = model.state_dim();
  m_ = model.control_dim();
  l_ = model.disturbance_dim();
  if (grid.dim() != n_) throw ShapeError("hamiltonian: grid dimension does not match the model");
  Vec x(n_);
  if (mode_ == HamiltonianMode::analytic_affine) {
    centers_and_radii(model.control_box(), u_center_, u_radius_);
    centers_and_radii(model.disturbance_box(), d_center_, d_radius_);
    const auto& a = model.affine();
    stride_ = n_ + n_ * m_ + n_ * l_;
    data_.resize(stride_ * grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      grid.node_point(k, x);
      double* row = data_.data() + k * stride_;
      a.drift.evaluate(x, std::span<double>(row, n_));
      a.control_gain.evaluate(x, std::span<double>(row + n_, n_ * m_));
      a.disturbance_gain.evaluate(x, std::span<double>(row + n_ + n_ * m_, n_ * l_));
    }
  } else {
    const auto& us = evaluator.control_samples();
    const auto& ds = evaluator.disturbance_samples();
    n_controls_ = us.size();
    n_disturbances_ = ds.size();
    stride_ = n_ * n_controls_ * n_disturbances_;
    data_.resize(stride_ * grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      grid.node_point(k, x);
      double* row = data_.data() + k * stride_;
      for (std::size_t d = 0; d < n_disturbances_; ++d) {
        for (std::size_t u = 0; u < n_controls_; ++u) {
          model.eval_dynamics_unchecked(x, us[u], ds[d],
                                        std::span<double>(row + (d * n_controls_ + u) * n_, n_));
        }
      }
    }
  }
}

double HamiltonianTable::eval(ValueKind kind, std::size_t node, std::span<const double> p) const {
  const double* row = data_.data() + node * stride_;
  if (mode_ == HamiltonianMode::analytic_affine) {
    return affine_closed_form(p, std::span<const double>(row, n_),
                              std::span<const double>(row + n_, n_ * m_),
                              std::span<const double>(row + n_ + n_ * m_, n_ * l_), u_center_,
                              u_radius_, d_center_, d_radius_);
  }
  double values[256] = {};
  std::vector<double> heap;
  const std::size_t pairs = n_controls_ * n_disturbances_;
  double* v = values;
  if (pairs > std::size(values)) {
    heap.resize(pairs);
    v = heap.data();
  }
  for (std::size_t q = 0; q < pairs; ++q) v[q] = dot(p, std::span<const double>(row + q * n_, n_));
  return minimax(kind, std::span<const double>(v, pairs), n_disturbances_, n_controls_);
}

}  // namespace rcis
