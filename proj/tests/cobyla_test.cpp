#include "emohead/cobyla.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "emohead/errors.hpp"

namespace emohead {
namespace {

TEST(Cobyla, UnconstrainedQuadratic) {
  auto fn = [](std::span<const double> x, std::span<double>) {
    return 10.0 * (x[0] + 1.0) * (x[0] + 1.0) + x[1] * x[1];
  };
  const auto r = cobyla_minimize(fn, 0, {1.0, 1.0}, {.rho_begin = 0.5, .rho_end = 1e-7});
  EXPECT_NEAR(r.x[0], -1.0, 1e-5);
  EXPECT_NEAR(r.x[1], 0.0, 1e-5);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.status, CobylaStatus::kConverged);
}

// min x*y subject to x^2 + y^2 <= 1: optimum at (1/sqrt2, -1/sqrt2) or mirror.
TEST(Cobyla, QuadraticOverUnitDisk) {
  auto fn = [](std::span<const double> x, std::span<double> c) {
    c[0] = 1.0 - x[0] * x[0] - x[1] * x[1];
    return x[0] * x[1];
  };
  const auto r = cobyla_minimize(fn, 1, {1.0, 1.0}, {.rho_begin = 0.5, .rho_end = 1e-7});
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.f, -0.5, 1e-5);
  EXPECT_NEAR(std::abs(r.x[0]), std::sqrt(0.5), 1e-4);
  EXPECT_LE(r.evaluations, 2000u);
}

// Linear objective on the simplex x_i >= 0, sum x = 1.
TEST(Cobyla, LinearOverSimplex) {
  auto fn = [](std::span<const double> x, std::span<double> c) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      c[i] = x[i];
      s += x[i];
    }
    c[3] = s - 1.0;
    c[4] = 1.0 - s;
    return 3.0 * x[0] + 1.0 * x[1] + 2.0 * x[2];
  };
  const auto r = cobyla_minimize(fn, 5, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {.rho_begin = 0.2, .rho_end = 1e-8});
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
  EXPECT_NEAR(r.f, 1.0, 1e-5);
  EXPECT_LE(r.max_violation, 1e-6);
}

TEST(Cobyla, InfeasibleReportsLeastViolation) {
  // x >= 1 and x <= -1 cannot both hold; best compromise violates by 1.
  auto fn = [](std::span<const double> x, std::span<double> c) {
    c[0] = x[0] - 1.0;
    c[1] = -1.0 - x[0];
    return x[0];
  };
  const auto r = cobyla_minimize(fn, 2, {3.0}, {.rho_begin = 0.5, .rho_end = 1e-6});
  EXPECT_FALSE(r.feasible);
  EXPECT_NEAR(r.max_violation, 1.0, 1e-4);
}

TEST(Cobyla, Deterministic) {
  auto fn = [](std::span<const double> x, std::span<double> c) {
    c[0] = 2.0 - x[0] - x[1];
    return (x[0] - 3) * (x[0] - 3) + (x[1] - 2) * (x[1] - 2);
  };
  const auto a = cobyla_minimize(fn, 1, {0.0, 0.0});
  const auto b = cobyla_minimize(fn, 1, {0.0, 0.0});
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.evaluations, b.evaluations);
  EXPECT_NEAR(a.x[0], 1.5, 1e-5);
  EXPECT_NEAR(a.x[1], 0.5, 1e-5);
}

TEST(Cobyla, BudgetStops) {
  auto fn = [](std::span<const double> x, std::span<double>) { return std::pow(x[0] - 5.0, 2); };
  const auto r = cobyla_minimize(fn, 0, {0.0}, {.rho_begin = 0.01, .rho_end = 1e-9, .max_evals = 10});
  EXPECT_EQ(r.status, CobylaStatus::kMaxEvals);
  EXPECT_EQ(r.evaluations, 10u);
}

TEST(Cobyla, RejectsBadOptions) {
  auto fn = [](std::span<const double>, std::span<double>) { return 0.0; };
  EXPECT_THROW(cobyla_minimize(fn, 0, {0.0}, {.rho_begin = 1e-3, .rho_end = 1e-2}), DomainError);
  EXPECT_THROW(cobyla_minimize(fn, 0, {0.0}, {.rho_begin = 1.0, .rho_end = 0.0}), DomainError);
  EXPECT_THROW(cobyla_minimize(fn, 0, {0.0, 0.0}, {.max_evals = 3}), DomainError);
}

TEST(Cobyla, ParabolaWithFeasibleOptimum) {
  auto fn = [](std::span<const double> x, std::span<double> c) {
    c[0] = x[0];
    return (x[0] - 1.0) * (x[0] - 1.0);
  };
  const auto r = cobyla_minimize(fn, 1, {5.0});
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.x[0], 1.0, 1e-3);
  EXPECT_LE(r.evaluations, 2000u);
}

TEST(Cobyla, LinearOverDisk) {
  auto fn = [](std::span<const double> x, std::span<double> c) {
    c[0] = 1.0 - x[0] * x[0] - x[1] * x[1];
    return x[0] + x[1];
  };
  const auto r = cobyla_minimize(fn, 1, {0.0, 0.0});
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.x[0], -std::sqrt(0.5), 1e-2);
  EXPECT_NEAR(r.x[1], -std::sqrt(0.5), 1e-2);
  EXPECT_LE(r.evaluations, 2000u);
}

TEST(Cobyla, InfeasibleStartReachesCorner) {
  auto fn = [](std::span<const double> x, std::span<double> c) {
    c[0] = x[0] - 2.0;
    return x[0];
  };
  const auto r = cobyla_minimize(fn, 1, {0.0});
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.x[0], 2.0, 1e-3);
  EXPECT_LE(r.evaluations, 2000u);
}

}  // namespace
}  // namespace emohead
