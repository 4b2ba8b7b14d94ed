#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rcis/dynamics.hpp"
#include "rcis/hamiltonian.hpp"
#include "rcis/setops.hpp"
#include "rcis/value_field.hpp"

namespace rcis {

/// Greedy best-response policies read off the value gradient.
///
/// The gradient is a central difference of the interpolated field with step
/// dx/2 per axis. Optimizers scan the evaluator's action samples in
/// lexicographic order and keep the first optimum, so ties resolve to the
/// earliest sample. Field, model and evaluator must outlive the policy.
class FeedbackPolicy {
 public:
  FeedbackPolicy(const ValueField& field, const HamiltonianEvaluator& evaluator);
  // The policy keeps references; temporaries would dangle.
  FeedbackPolicy(ValueField&&, const HamiltonianEvaluator&) = delete;
  FeedbackPolicy(const ValueField&, HamiltonianEvaluator&&) = delete;

  Vec gradient(std::span<const double> x) const;

  /// argmin_u grad V(x) . f(x,u,d). Throws DomainError if d lies outside D.
  Vec control(std::span<const double> x, std::span<const double> d) const;
  /// argmax_d min_u grad V(x) . f(x,u,d).
  Vec disturbance(std::span<const double> x) const;

  const GameModel& model() const { return evaluator_->model(); }
  const std::vector<Vec>& control_samples() const { return evaluator_->control_samples(); }

 private:
  std::size_t best_control(std::span<const double> x, std::span<const double> grad,
                           std::span<const double> d, double* value) const;

  const ValueField* field_;
  const HamiltonianEvaluator* evaluator_;
};

Vec feedback_control(const FeedbackPolicy& policy, std::span<const double> x, std::span<const double> d);
Vec worst_case_disturbance(const FeedbackPolicy& policy, std::span<const double> x);

// Policy descriptions for simulate(). A sequence supplies one action per
// step and holds its last entry once exhausted.
struct FeedbackControl {
  const FeedbackPolicy* policy;
};
struct WorstCaseDisturbance {
  const FeedbackPolicy* policy;
};
struct RandomDisturbance {
  std::uint64_t seed;
};
struct ConstantAction {
  Vec value;
};
struct ActionSequence {
  std::vector<Vec> values;
};

using ControlPolicy = std::variant<FeedbackControl, ConstantAction, ActionSequence>;
using DisturbancePolicy = std::variant<WorstCaseDisturbance, RandomDisturbance, ConstantAction, ActionSequence>;

/// Row k holds the state at times[k] and the actions applied on
/// [times[k], times[k+1]); the last row repeats the actions the policies
/// choose at the final state.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;
  std::vector<Vec> disturbances;
  std::vector<double> constraint;

  std::size_t size() const { return times.size(); }
  double max_constraint() const;
};

/// Thrown when the state stops being finite; carries the partial trajectory.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Classical RK4 with zero-order hold of both actions over each step. The
/// disturbance is chosen first and the control responds to it.
Trajectory simulate(const GameModel& model, const ControlPolicy& control,
                    const DisturbancePolicy& disturbance, std::span<const double> x0, double t_final,
                    double dt_sim);

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

struct VerificationOptions {
  std::size_t trials = 100;
  double epsilon = 0.05;
  double t_final = 10.0;
  double dt_sim = 0.01;
  std::uint64_t seed = 1;
  /// Distance (in cells) to the mask boundary required of start nodes.
  std::size_t margin = 2;
};

struct VerificationReport {
  std::size_t interior_candidates = 0;
  std::size_t trials = 0;
  std::size_t runs = 0;
  std::size_t passes = 0;
  double pass_fraction = 0.0;
  double worst_sup_h = 0.0;
  Vec worst_initial_state;
  std::string worst_disturbance;
  /// Set when the mask has no interior node to start from.
  bool no_interior = false;

  bool passed(double threshold) const { return !no_interior && pass_fraction >= threshold; }
};

/// Simulates feedback control from sampled interior mask nodes against the
/// worst-case disturbance and a seeded random disturbance, and reports the
/// fraction of runs with sup_t h(x(t)) <= epsilon.
VerificationReport verify_invariance(const GameModel& model, const ValueField& field, const GridMask& mask,
                                     const HamiltonianEvaluator& evaluator,
                                     const VerificationOptions& options);

void write_verification_report(std::ostream& os, const VerificationReport& report);

/// Uniform double in [0, 1) from the top 53 bits of a draw. Used instead of
/// std::uniform_real_distribution, whose output is implementation-defined.
double uniform01(std::mt19937_64& rng);

}  // namespace rcis
