#include <gtest/gtest.h>

#include "rcis/errors.hpp"
#include "rcis/hamiltonian.hpp"
#include "support.hpp"

namespace rcis {
namespace {

HamiltonianOptions sampled(std::size_t per_axis) {
  HamiltonianOptions o;
  o.mode = HamiltonianMode::sampled;
  o.control_samples = per_axis;
  o.disturbance_samples = per_axis;
  return o;
}

TEST(Hamiltonian, JetExamples) {
  const GameModel m = builtin_model("jet_engine");
  const HamiltonianEvaluator ev(m);
  EXPECT_EQ(ev.mode(), HamiltonianMode::analytic_affine);
  EXPECT_EQ(ev.lower(Vec{0.0, 0.0}, Vec{0.0, 0.0}), 0.0);
  EXPECT_NEAR(ev.lower(Vec{0.0, 0.0}, Vec{1.0, 0.0}), 0.02, 1e-16);
  EXPECT_NEAR(ev.upper(Vec{0.0, 0.0}, Vec{1.0, 0.0}), 0.02, 1e-16);
  EXPECT_NEAR(ev.lower(Vec{0.1, 0.0}, Vec{0.0, 1.0}), 0.07976, 1e-15);
  EXPECT_NEAR(ev.upper(Vec{0.1, 0.0}, Vec{0.0, 1.0}), 0.07976, 1e-15);

  const HamiltonianEvaluator vertices(m, sampled(2));
  EXPECT_NEAR(vertices.lower(Vec{0.0, 0.0}, Vec{1.0, 0.0}), 0.02, 1e-16);
  EXPECT_NEAR(vertices.upper(Vec{0.1, 0.0}, Vec{0.0, 1.0}), 0.07976, 1e-15);
}

TEST(Hamiltonian, ZeroCostateGivesZero) {
  std::mt19937_64 rng(1);
  for (const auto& name : builtin_model_names()) {
    const GameModel m = builtin_model(name);
    const HamiltonianEvaluator ev(m);
    for (int i = 0; i < 50; ++i) {
      const Vec x = test::random_point(rng, Vec(m.state_dim(), -1.0), Vec(m.state_dim(), 1.0));
      const Vec p(m.state_dim(), 0.0);
      EXPECT_EQ(ev.lower(x, p), 0.0);
      EXPECT_EQ(ev.upper(x, p), 0.0);
    }
  }
}

TEST(Hamiltonian, AnalyticLowerEqualsUpper) {
  std::mt19937_64 rng(2);
  const GameModel m = builtin_model("jet_engine");
  const HamiltonianEvaluator ev(m);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = test::random_point(rng, {-1, -1}, {1, 1});
    const Vec p = test::random_point(rng, {-5, -5}, {5, 5});
    EXPECT_EQ(ev.lower(x, p), ev.upper(x, p));
  }
}

TEST(Hamiltonian, PositivelyHomogeneous) {
  std::mt19937_64 rng(3);
  const GameModel jet = builtin_model("jet_engine");
  const GameModel game = test::non_isaacs_1d();
  const HamiltonianEvaluator analytic(jet), jet_sampled(jet, sampled(5)), general(game);
  for (int i = 0; i < 500; ++i) {
    const double lambda = test::uniform(rng, 0.0, 10.0);
    const Vec x = test::random_point(rng, {-1, -1}, {1, 1});
    const Vec p = test::random_point(rng, {-3, -3}, {3, 3});
    const Vec lp{lambda * p[0], lambda * p[1]};
    for (ValueKind k : {ValueKind::lower, ValueKind::upper}) {
      const double h = analytic.eval(k, x, p);
      // Exact up to the rounding of the term sums.
      const double scale = 1.0 + lambda * (std::abs(p[0]) + std::abs(p[1])) * 4.0;
      EXPECT_NEAR(analytic.eval(k, x, lp), lambda * h, 1e-15 * scale);
      EXPECT_NEAR(jet_sampled.eval(k, x, lp), lambda * jet_sampled.eval(k, x, p), 1e-12);
      const Vec x1{x[0]}, p1{p[0]}, lp1{lp[0]};
      EXPECT_NEAR(general.eval(k, x1, lp1), lambda * general.eval(k, x1, p1), 1e-12);
    }
  }
}

TEST(Hamiltonian, SampledMinimaxInequality) {
  std::mt19937_64 rng(4);
  const GameModel game = test::non_isaacs_1d();
  const HamiltonianEvaluator ev(game);
  EXPECT_EQ(ev.mode(), HamiltonianMode::sampled);
  bool strict = false;
  for (int i = 0; i < 1000; ++i) {
    const Vec x{test::uniform(rng, -1, 1)}, p{test::uniform(rng, -3, 3)};
    const double lo = ev.lower(x, p), hi = ev.upper(x, p);
    EXPECT_LE(lo, hi);
    strict = strict || hi > lo + 1e-6;
  }
  EXPECT_TRUE(strict) << "the (u-d)^2 game should violate the Isaacs condition";
  // p = 1 at x = 0: sup_d inf_u (u-d)^2 = 0, inf_u sup_d (u-d)^2 = 1.
  EXPECT_NEAR(ev.lower(Vec{0.0}, Vec{1.0}), 0.0, 1e-15);
  EXPECT_NEAR(ev.upper(Vec{0.0}, Vec{1.0}), 1.0, 1e-15);
}

TEST(Hamiltonian, AnalyticMatchesVertexAndFineSampling) {
  std::mt19937_64 rng(5);
  for (const char* name : {"jet_engine", "affine_test_2d"}) {
    const GameModel m = builtin_model(name);
    const HamiltonianEvaluator analytic(m), vertices(m, sampled(2)), fine(m, sampled(9));
    for (int i = 0; i < 1000; ++i) {
      const Vec x = test::random_point(rng, {-1, -1}, {1, 1});
      const Vec p = test::random_point(rng, {-4, -4}, {4, 4});
      for (ValueKind k : {ValueKind::lower, ValueKind::upper}) {
        EXPECT_NEAR(vertices.eval(k, x, p), analytic.eval(k, x, p), 1e-12);
        EXPECT_NEAR(fine.eval(k, x, p), analytic.eval(k, x, p), 1e-12);
      }
    }
  }
}

TEST(Hamiltonian, LipschitzInCostate) {
  std::mt19937_64 rng(6);
  const GameModel m = builtin_model("jet_engine");
  const Grid g = test::square_grid(41);
  for (const HamiltonianOptions& opt : {HamiltonianOptions{}, sampled(5)}) {
    const HamiltonianEvaluator ev(m, opt);
    const Vec alpha = ev.dissipation_bounds(g);
    for (int i = 0; i < 2000; ++i) {
      const Vec x = test::random_point(rng, {-1, -1}, {1, 1});
      const Vec p = test::random_point(rng, {-3, -3}, {3, 3});
      const Vec q = test::random_point(rng, {-3, -3}, {3, 3});
      const double bound = alpha[0] * std::abs(p[0] - q[0]) + alpha[1] * std::abs(p[1] - q[1]);
      for (ValueKind k : {ValueKind::lower, ValueKind::upper})
        EXPECT_LE(std::abs(ev.eval(k, x, p) - ev.eval(k, x, q)), bound + 1e-14);
    }
  }
}

TEST(Dissipation, Singleton1d) {
  const GameModel m = builtin_model("singleton_1d");
  const Vec a = HamiltonianEvaluator(m).dissipation_bounds(Grid({-1.0}, {1.0}, {201}));
  ASSERT_EQ(a.size(), 1u);
  EXPECT_NEAR(a[0], 1.1, 1e-15);
}

TEST(Dissipation, ConstantFieldFloorsIdleAxis) {
  const double c = -0.7;
  AffineDynamics dyn{PolynomialMap(2, {{{c, {0, 0}}}, {}}), PolynomialMap(2, {{}, {}}), PolynomialMap(2, {{}, {}})};
  const GameModel m = polynomial_model("constant", dyn, Box({0.0}, {0.0}), Box({0.0}, {0.0}),
                                       PolynomialMap(2, {{{1.0, {2, 0}}, {1.0, {0, 2}}, {-0.25, {0, 0}}}}));
  std::vector<std::string> warnings;
  const Vec a = HamiltonianEvaluator(m).dissipation_bounds(test::square_grid(11), &warnings);
  EXPECT_NEAR(a[0], 1.1 * std::abs(c), 1e-15);
  EXPECT_GT(a[1], 0.0);
  EXPECT_LE(a[1], 1e-15);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Dissipation, JetMatchesDirectScan) {
  const GameModel m = builtin_model("jet_engine");
  const Grid g = test::square_grid(201);
  const Vec a = HamiltonianEvaluator(m).dissipation_bounds(g);
  Vec expect(2, 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec x = g.node_point(k);
    for (double u : {-0.01, 0.01})
      for (double d : {-0.02, 0.02}) {
        const Vec f = m.eval_dynamics(x, Vec{u}, Vec{d});
        for (std::size_t i = 0; i < 2; ++i) expect[i] = std::max(expect[i], std::abs(f[i]));
      }
  }
  EXPECT_NEAR(a[0], 1.1 * expect[0], 1e-14);
  EXPECT_NEAR(a[1], 1.1 * expect[1], 1e-14);
  // Corner (1, 1): |-1 - 1.5 - 0.5 - 0.02| = 3.02 dominates axis 1.
  EXPECT_NEAR(expect[0], 3.02, 1e-12);
}

TEST(Hamiltonian, AnalyticModeNeedsAffineModel) {
  const GameModel game = test::non_isaacs_1d();
  HamiltonianOptions o;
  o.mode = HamiltonianMode::analytic_affine;
  EXPECT_THROW(HamiltonianEvaluator(game, o), ConfigError);
  HamiltonianOptions weak;
  weak.safety_factor = 0.9;
  EXPECT_THROW(HamiltonianEvaluator(builtin_model("jet_engine"), weak), ConfigError);
}

TEST(HamiltonianTable, MatchesEvaluator) {
  std::mt19937_64 rng(8);
  const GameModel m = builtin_model("jet_engine");
  const Grid g = test::square_grid(21);
  for (const HamiltonianOptions& opt : {HamiltonianOptions{}, sampled(3)}) {
    const HamiltonianEvaluator ev(m, opt);
    const HamiltonianTable table(ev, g);
    for (std::size_t k = 0; k < g.size(); k += 7) {
      const Vec p = test::random_point(rng, {-2, -2}, {2, 2});
      for (ValueKind kind : {ValueKind::lower, ValueKind::upper})
        EXPECT_NEAR(table.eval(kind, k, p), ev.eval(kind, g.node_point(k), p), 1e-14);
    }
  }
}

}  // namespace
}  // namespace rcis
