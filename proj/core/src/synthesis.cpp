#include "rcis/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "rcis/errors.hpp"

namespace rcis {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

}  // namespace

FeedbackPolicy::FeedbackPolicy(const ValueField& field, const HamiltonianEvaluator& evaluator)
    : field_(&field), evaluator_(&evaluator) {
  if (field.grid.dim() != evaluator.model().state_dim()) {
    throw ShapeError("feedback: field dimension does not match the model");
  }
}

Vec FeedbackPolicy::gradient(std::span<const double> x) const {
  const Grid& g = field_->grid;
  const std::size_t n = g.dim();
  Vec grad(n), plus(x.begin(), x.end()), minus(x.begin(), x.end());
  g.clamp(plus);
  g.clamp(minus);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 0.5 * g.spacing()[i];
    const double center = std::clamp(x[i], g.lower()[i], g.upper()[i]);
    plus[i] = std::min(center + h, g.upper()[i]);
    minus[i] = std::max(center - h, g.lower()[i]);
    grad[i] = (g.interpolate(field_->values, plus) - g.interpolate(field_->values, minus)) / (plus[i] - minus[i]);
    plus[i] = minus[i] = center;
  }
  return grad;
}

std::size_t FeedbackPolicy::best_control(std::span<const double> x, std::span<const double> grad,
                                         std::span<const double> d, double* value) const {
  const auto& us = evaluator_->control_samples();
  Vec f(x.size());
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < us.size(); ++u) {
    evaluator_->model().eval_dynamics_unchecked(x, us[u], d, f);
    const double v = dot(grad, f);
    if (v < best_value) {
      best_value = v;
      best = u;
    }
  }
  if (value) *value = best_value;
  return best;
}

Vec FeedbackPolicy::control(std::span<const double> x, std::span<const double> d) const {
  if (!model().disturbance_box().contains(d)) throw DomainError("feedback: disturbance outside D");
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError("feedback: non-finite state");
  }
  const Vec grad = gradient(x);
  return evaluator_->control_samples()[best_control(x, grad, d, nullptr)];
}

Vec FeedbackPolicy::disturbance(std::span<const double> x) const {
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError("feedback: non-finite state");
  }
  const Vec grad = gradient(x);
  const auto& ds = evaluator_->disturbance_samples();
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < ds.size(); ++d) {
    double inner;
    best_control(x, grad, ds[d], &inner);
    if (inner > best_value) {
      best_value = inner;
      best = d;
    }
  }
  return ds[best];
}

Vec feedback_control(const FeedbackPolicy& policy, std::span<const double> x, std::span<const double> d) {
  return policy.control(x, d);
}

Vec worst_case_disturbance(const FeedbackPolicy& policy, std::span<const double> x) {
  return policy.disturbance(x);
}

double Trajectory::max_constraint() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double h : constraint) m = std::max(m, h);
  return m;
}

namespace {

Vec checked(const Box& box, const Vec& v, const char* what) {
  if (!box.contains(v)) throw DomainError(std::string("simulate: ") + what + " action outside its box");
  return v;
}

Vec from_sequence(const ActionSequence& s, std::size_t step) {
  if (s.values.empty()) throw ConfigError("simulate: empty action sequence");
  return s.values[std::min(step, s.values.size() - 1)];
}

}  // namespace

Trajectory simulate(const GameModel& model, const ControlPolicy& control,
                    const DisturbancePolicy& disturbance, std::span<const double> x0, double t_final,
                    double dt_sim) {
  if (!(dt_sim > 0.0)) throw DomainError("simulate: dt_sim must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw DomainError("simulate: t_final must be >= 0");
  const std::size_t n = model.state_dim();
  if (x0.size() != n) throw ShapeError("simulate: x0 has wrong dimension");
  const Box& ubox = model.control_box();
  const Box& dbox = model.disturbance_box();

  std::size_t steps = 0;
  if (t_final > 0.0) steps = static_cast<std::size_t>(std::ceil(t_final / dt_sim - 1e-9));
  std::mt19937_64 rng(std::holds_alternative<RandomDisturbance>(disturbance)
                          ? std::get<RandomDisturbance>(disturbance).seed
                          : 0);

  auto pick_disturbance = [&](std::span<const double> x, std::size_t k) -> Vec {
    return std::visit(
        [&](const auto& p) -> Vec {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, WorstCaseDisturbance>) {
            return p.policy->disturbance(x);
          } else if constexpr (std::is_same_v<P, RandomDisturbance>) {
            Vec d(dbox.dim());
            for (std::size_t i = 0; i < d.size(); ++i) {
              d[i] = dbox.lower[i] + (dbox.upper[i] - dbox.lower[i]) * uniform01(rng);
            }
            return d;
          } else if constexpr (std::is_same_v<P, ConstantAction>) {
            return checked(dbox, p.value, "disturbance");
          } else {
            return checked(dbox, from_sequence(p, k), "disturbance");
          }
        },
        disturbance);
  };
  auto pick_control = [&](std::span<const double> x, std::span<const double> d, std::size_t k) -> Vec {
    return std::visit(
        [&](const auto& p) -> Vec {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, FeedbackControl>) {
            return p.policy->control(x, d);
          } else if constexpr (std::is_same_v<P, ConstantAction>) {
            return checked(ubox, p.value, "control");
          } else {
            return checked(ubox, from_sequence(p, k), "control");
          }
        },
        control);
  };

  Trajectory traj;
  Vec x(x0.begin(), x0.end());
  Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
  double t = 0.0;
  for (std::size_t k = 0;; ++k) {
    Vec d = pick_disturbance(x, k);
    Vec u = pick_control(x, d, k);
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.constraint.push_back(model.eval_constraint(x));
    traj.controls.push_back(u);
    traj.disturbances.push_back(d);
    if (k == steps) break;

    const double t_next = k + 1 == steps ? t_final : static_cast<double>(k + 1) * dt_sim;
    const double h = t_next - t;
    model.eval_dynamics_unchecked(x, u, d, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    model.eval_dynamics_unchecked(tmp, u, d, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    model.eval_dynamics_unchecked(tmp, u, d, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    model.eval_dynamics_unchecked(tmp, u, d, k4);
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t = t_next;
    for (double v : x) {
      if (!std::isfinite(v)) {
        throw DivergedError("simulate: state diverged at t = " + std::to_string(t), std::move(traj));
      }
    }
  }
  return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t n = traj.states.empty() ? 0 : traj.states[0].size();
  const std::size_t m = traj.controls.empty() ? 0 : traj.controls[0].size();
  const std::size_t l = traj.disturbances.empty() ? 0 : traj.disturbances[0].size();
  os << 't';
  for (std::size_t i = 0; i < n; ++i) os << ",x" << i + 1;
  for (std::size_t i = 0; i < m; ++i) os << ",u" << i + 1;
  for (std::size_t i = 0; i < l; ++i) os << ",d" << i + 1;
  os << ",h\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << format_scalar(traj.times[k]);
    for (double v : traj.states[k]) os << ',' << format_scalar(v);
    for (double v : traj.controls[k]) os << ',' << format_scalar(v);
    for (double v : traj.disturbances[k]) os << ',' << format_scalar(v);
    os << ',' << format_scalar(traj.constraint[k]) << '\n';
  }
}

VerificationReport verify_invariance(const GameModel& model, const ValueField& field, const GridMask& mask,
                                     const HamiltonianEvaluator& evaluator,
                                     const VerificationOptions& options) {
  if (options.trials == 0) throw ConfigError("verify: trials must be at least 1");
  if (!(field.grid == mask.grid)) throw ShapeError("verify: mask and field live on different grids");
  VerificationReport report;
  auto candidates = interior_nodes(mask, options.margin);
  report.interior_candidates = candidates.size();
  if (candidates.empty()) {
    report.no_interior = true;
    return report;
  }
  std::mt19937_64 rng(options.seed);
  if (candidates.size() > options.trials) {
    // Partial Fisher-Yates: the first `trials` entries become the sample.
    for (std::size_t i = 0; i < options.trials; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, candidates.size() - i));
      std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(options.trials);
    std::sort(candidates.begin(), candidates.end());
  }
  report.trials = candidates.size();

  const FeedbackPolicy policy(field, evaluator);
  const auto count = static_cast<std::ptrdiff_t>(candidates.size());
  std::vector<double> sup_worst(candidates.size()), sup_random(candidates.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t si = 0; si < count; ++si) {
    const auto i = static_cast<std::size_t>(si);
    const Vec x0 = field.grid.node_point(candidates[i]);
    auto sup_h = [&](const DisturbancePolicy& dp) {
      try {
        return simulate(model, FeedbackControl{&policy}, dp, x0, options.t_final, options.dt_sim)
            .max_constraint();
      } catch (const DivergedError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    sup_worst[i] = sup_h(WorstCaseDisturbance{&policy});
    sup_random[i] = sup_h(RandomDisturbance{options.seed + 0x9e3779b97f4a7c15ull * (i + 1)});
  }

  report.worst_sup_h = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (int which = 0; which < 2; ++which) {
      const double s = which == 0 ? sup_worst[i] : sup_random[i];
      ++report.runs;
      if (s <= options.epsilon) ++report.passes;
      if (s > report.worst_sup_h) {
        report.worst_sup_h = s;
        report.worst_initial_state = field.grid.node_point(candidates[i]);
        report.worst_disturbance = which == 0 ? "worst_case" : "random";
      }
    }
  }
  report.pass_fraction = static_cast<double>(report.passes) / static_cast<double>(report.runs);
  return report;
}

void write_verification_report(std::ostream& os, const VerificationReport& r) {
  os << "interior_candidates = " << r.interior_candidates << '\n';
  os << "trials = " << r.trials << '\n';
  if (r.no_interior) {
    os << "status = no interior mask nodes; nothing simulated\n";
    return;
  }
  os << "runs = " << r.runs << '\n';
  os << "passes = " << r.passes << '\n';
  os << "pass_fraction = " << format_scalar(r.pass_fraction) << '\n';
  os << "worst_sup_h = " << format_scalar(r.worst_sup_h) << '\n';
  os << "worst_initial_state =";
  for (double v : r.worst_initial_state) os << ' ' << format_scalar(v);
  os << '\n';
  os << "worst_disturbance = " << r.worst_disturbance << '\n';
}

}  // namespace rcis
