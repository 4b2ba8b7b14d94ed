#include <gtest/gtest.h>

#include <sstream>

#include "rcis/errors.hpp"
#include "rcis/hj_solver.hpp"
#include "rcis/parallel.hpp"
#include "rcis/setops.hpp"
#include "rcis/synthesis.hpp"
#include "support.hpp"

namespace rcis {
namespace {

using test::sample_field;

class JetPolicy : public ::testing::Test {
 protected:
  GameModel model = builtin_model("jet_engine");
  HamiltonianEvaluator evaluator{model};
  Grid grid = test::square_grid(41);
};

TEST_F(JetPolicy, ControlOpposesPositiveVerticalSlope) {
  const ValueField f = sample_field(grid, [](const Vec& x) { return x[1]; });
  const FeedbackPolicy policy(f, evaluator);
  const Vec g = policy.gradient(Vec{0.3, 0.1});
  EXPECT_NEAR(g[0], 0.0, 1e-12);
  EXPECT_NEAR(g[1], 1.0, 1e-12);
  for (double d : {-0.02, 0.0, 0.02}) EXPECT_EQ(feedback_control(policy, Vec{0.3, 0.1}, Vec{d}), Vec{-0.01});
  // For x < 0 the sign of the gain flips.
  EXPECT_EQ(feedback_control(policy, Vec{-0.3, 0.1}, Vec{0.0}), Vec{0.01});
}

TEST_F(JetPolicy, DisturbanceFollowsHorizontalSlope) {
  const ValueField f = sample_field(grid, [](const Vec& x) { return 0.7 * x[0]; });
  const FeedbackPolicy policy(f, evaluator);
  EXPECT_EQ(worst_case_disturbance(policy, Vec{0.2, -0.4}), Vec{0.02});
  const ValueField g = sample_field(grid, [](const Vec& x) { return -x[0]; });
  const FeedbackPolicy flipped(g, evaluator);
  EXPECT_EQ(worst_case_disturbance(flipped, Vec{0.2, -0.4}), Vec{-0.02});
}

TEST_F(JetPolicy, ZeroGradientPicksFirstSample) {
  const ValueField f = sample_field(grid, [](const Vec&) { return 0.2; });
  const FeedbackPolicy policy(f, evaluator);
  EXPECT_EQ(feedback_control(policy, Vec{0.1, 0.1}, Vec{0.0}), evaluator.control_samples().front());
  EXPECT_EQ(worst_case_disturbance(policy, Vec{0.1, 0.1}), evaluator.disturbance_samples().front());
}

TEST_F(JetPolicy, DisturbanceOutsideBoxThrows) {
  const ValueField f = sample_field(grid, [](const Vec& x) { return x[1]; });
  const FeedbackPolicy policy(f, evaluator);
  EXPECT_THROW(feedback_control(policy, Vec{0.0, 0.0}, Vec{0.05}), DomainError);
}

TEST_F(JetPolicy, ActionsStayInBoxes) {
  std::mt19937_64 rng(12);
  const ValueField f = sample_field(grid, [](const Vec& x) { return std::sin(3 * x[0]) * std::cos(2 * x[1]); });
  const FeedbackPolicy policy(f, evaluator);
  for (int i = 0; i < 2000; ++i) {
    const Vec x = test::random_point(rng, {-1.3, -1.3}, {1.3, 1.3});
    const Vec d = worst_case_disturbance(policy, x);
    EXPECT_TRUE(model.disturbance_box().contains(d));
    const Vec drand{test::uniform(rng, -0.02, 0.02)};
    EXPECT_TRUE(model.control_box().contains(feedback_control(policy, x, d)));
    EXPECT_TRUE(model.control_box().contains(feedback_control(policy, x, drand)));
  }
}

TEST(Singletons, PoliciesReturnThePoint) {
  const GameModel m = builtin_model("singleton_1d");
  const HamiltonianEvaluator ev(m);
  const Grid g({-1.0}, {1.0}, {41});
  const ValueField f = sample_field(g, [](const Vec& x) { return x[0] * x[0]; });
  const FeedbackPolicy policy(f, ev);
  EXPECT_EQ(feedback_control(policy, Vec{0.4}, Vec{0.0}), Vec{0.0});
  EXPECT_EQ(worst_case_disturbance(policy, Vec{-0.4}), Vec{0.0});
}

TEST(Simulate, ZeroHorizonGivesInitialState) {
  const GameModel m = builtin_model("jet_engine");
  const Trajectory t = simulate(m, ConstantAction{{0.0}}, ConstantAction{{0.0}}, Vec{0.1, 0.2}, 0.0, 0.01);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.states[0], (Vec{0.1, 0.2}));
  EXPECT_EQ(t.times[0], 0.0);
  EXPECT_EQ(t.constraint[0], m.eval_constraint(Vec{0.1, 0.2}));
}

TEST(Simulate, Singleton1dMatchesClosedForm) {
  const GameModel m = builtin_model("singleton_1d");
  const Trajectory t = simulate(m, ConstantAction{{0.0}}, ConstantAction{{0.0}}, Vec{0.4}, 5.0, 0.01);
  EXPECT_EQ(t.size(), 501u);
  EXPECT_NEAR(t.times.back(), 5.0, 1e-12);
  EXPECT_NEAR(t.states.back()[0], 0.4 * std::exp(-5.0), 1e-6);
  for (std::size_t k = 1; k < t.size(); ++k) ASSERT_GT(t.times[k], t.times[k - 1]);
}

TEST(Simulate, Rk4IsFourthOrder) {
  const GameModel m = builtin_model("singleton_1d");
  const double exact = 0.4 * std::exp(-5.0);
  auto error = [&](double dt) {
    return std::abs(simulate(m, ConstantAction{{0.0}}, ConstantAction{{0.0}}, Vec{0.4}, 5.0, dt).states.back()[0] -
                    exact);
  };
  for (double dt : {0.2, 0.1, 0.05}) {
    const double ratio = error(dt) / error(dt / 2);
    EXPECT_GE(ratio, 8.0) << "dt " << dt;
    EXPECT_LE(ratio, 32.0) << "dt " << dt;
  }
}

TEST(Simulate, TruncatesLastStepToHorizon) {
  const GameModel m = builtin_model("singleton_1d");
  const Trajectory t = simulate(m, ConstantAction{{0.0}}, ConstantAction{{0.0}}, Vec{0.4}, 0.25, 0.1);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_DOUBLE_EQ(t.times.back(), 0.25);
  EXPECT_NEAR(t.states.back()[0], 0.4 * std::exp(-0.25), 1e-7);
}

TEST(Simulate, SequencesHoldTheirLastEntry) {
  const GameModel m = builtin_model("jet_engine");
  const Trajectory t = simulate(m, ActionSequence{{{0.01}, {-0.01}}}, ActionSequence{{{0.02}}}, Vec{0.0, 0.0},
                                0.05, 0.01);
  ASSERT_EQ(t.size(), 6u);
  EXPECT_EQ(t.controls[0], Vec{0.01});
  EXPECT_EQ(t.controls[1], Vec{-0.01});
  EXPECT_EQ(t.controls[4], Vec{-0.01});
  for (const auto& d : t.disturbances) EXPECT_EQ(d, Vec{0.02});
}

TEST(Simulate, RandomDisturbanceIsSeeded) {
  const GameModel m = builtin_model("jet_engine");
  auto run = [&](std::uint64_t seed) {
    return simulate(m, ConstantAction{{0.0}}, RandomDisturbance{seed}, Vec{0.1, 0.0}, 2.0, 0.01);
  };
  const Trajectory a = run(5), b = run(5), c = run(6);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.disturbances, b.disturbances);
  EXPECT_NE(a.disturbances, c.disturbances);
  for (const auto& d : a.disturbances) EXPECT_TRUE(m.disturbance_box().contains(d));
}

TEST(Simulate, DivergenceCarriesPartialTrajectory) {
  GeneralDynamics blowup{[](std::span<const double> x, std::span<const double>, std::span<const double>,
                            std::span<double> out) { out[0] = x[0] * x[0] * x[0]; }};
  const GameModel m("cubic", 1, Box({0.0}, {0.0}), Box({0.0}, {0.0}), blowup,
                    Constraint{[](std::span<const double>) { return 0.0; }, 0.5, "zero"});
  try {
    simulate(m, ConstantAction{{0.0}}, ConstantAction{{0.0}}, Vec{10.0}, 1.0, 0.01);
    FAIL() << "expected DivergedError";
  } catch (const DivergedError& e) {
    EXPECT_GE(e.partial().size(), 1u);
    EXPECT_LT(e.partial().size(), 101u);
    EXPECT_EQ(e.partial().states.front(), Vec{10.0});
  }
}

TEST(Simulate, FeedbackIsBestResponseToAppliedDisturbance) {
  const GameModel m = builtin_model("jet_engine");
  const HamiltonianEvaluator ev(m);
  const ValueField f = solve(m, test::square_grid(61), SolveConfig{}).field;
  const FeedbackPolicy policy(f, ev);
  for (const DisturbancePolicy& dist : {DisturbancePolicy{WorstCaseDisturbance{&policy}},
                                        DisturbancePolicy{RandomDisturbance{3}}}) {
    const Trajectory t = simulate(m, FeedbackControl{&policy}, dist, Vec{0.2, -0.1}, 3.0, 0.01);
    for (std::size_t k = 0; k < t.size(); ++k) {
      const Vec grad = policy.gradient(t.states[k]);
      auto cost = [&](const Vec& u) {
        const Vec fx = m.eval_dynamics(t.states[k], u, t.disturbances[k]);
        return grad[0] * fx[0] + grad[1] * fx[1];
      };
      const double applied = cost(t.controls[k]);
      for (const Vec& u : ev.control_samples()) ASSERT_LE(applied, cost(u) + 1e-15) << "step " << k;
    }
  }
}

TEST(TrajectoryCsv, Columns) {
  const GameModel m = builtin_model("jet_engine");
  const Trajectory t = simulate(m, ConstantAction{{0.0}}, ConstantAction{{0.0}}, Vec{0.0, 0.0}, 0.02, 0.01);
  std::stringstream ss;
  write_trajectory_csv(ss, t);
  std::string header, row;
  std::getline(ss, header);
  EXPECT_EQ(header, "t,x1,x2,u1,d1,h");
  std::size_t rows = 0;
  while (std::getline(ss, row)) {
    ++rows;
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 5);
  }
  EXPECT_EQ(rows, 3u);
}

TEST(Uniform01, RangeAndDeterminism) {
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(a);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_EQ(u, uniform01(b));
  }
  std::mt19937_64 c(1);
  EXPECT_EQ(uniform01(c), static_cast<double>(std::mt19937_64(1)() >> 11) * 0x1.0p-53);
}

TEST(VerifyInvariance, EmptyInteriorIsFlagged) {
  const GameModel m = builtin_model("jet_engine");
  const Grid g = test::square_grid(21);
  const ValueField f = test::make_field(g, std::vector<double>(g.size(), 0.3));
  const HamiltonianEvaluator ev(m);
  const VerificationReport r = verify_invariance(m, f, extract_sublevel(f, 0.01), ev, VerificationOptions{});
  EXPECT_TRUE(r.no_interior);
  EXPECT_EQ(r.runs, 0u);
  EXPECT_FALSE(r.passed(0.99));
}

TEST(VerifyInvariance, Singleton1dContractsToOrigin) {
  const GameModel m = builtin_model("singleton_1d");
  const Grid g({-1.0}, {1.0}, {201});
  const ValueField f = solve(m, g, SolveConfig{}).field;
  GridMask mask{g, std::vector<std::uint8_t>(g.size(), 0), 0.01};
  for (std::size_t k = 0; k < g.size(); ++k) mask.flags[k] = std::abs(g.node_point(k)[0]) <= 0.45 + 1e-12;
  const HamiltonianEvaluator ev(m);
  VerificationOptions opt;
  opt.epsilon = 0.01;
  opt.trials = 50;
  const VerificationReport r = verify_invariance(m, f, mask, ev, opt);
  EXPECT_FALSE(r.no_interior);
  EXPECT_EQ(r.trials, 50u);
  EXPECT_EQ(r.runs, 100u);
  EXPECT_EQ(r.pass_fraction, 1.0);
  EXPECT_LE(r.worst_sup_h, 0.0);
}

TEST(VerifyInvariance, JetCoarseGridDeterministicAcrossThreads) {
  const GameModel m = builtin_model("jet_engine");
  const ValueField f = solve(m, test::square_grid(81), SolveConfig{}).field;
  const HamiltonianEvaluator ev(m);
  VerificationOptions opt;
  opt.trials = 30;
  const GridMask mask = extract_sublevel(f, 0.01);
  set_thread_count(1);
  const VerificationReport a = verify_invariance(m, f, mask, ev, opt);
  set_thread_count(3);
  const VerificationReport b = verify_invariance(m, f, mask, ev, opt);
  set_thread_count(0);
  std::ostringstream sa, sb;
  write_verification_report(sa, a);
  write_verification_report(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_GE(a.pass_fraction, 0.99);
  EXPECT_EQ(a.trials, 30u);
}

}  // namespace
}  // namespace rcis
