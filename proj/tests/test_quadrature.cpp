#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qdread/quadrature.hpp"
#include "qdread/roots.hpp"

using namespace qdread;

TEST(Quadrature, PolynomialsExact) {
  const double bp[] = {-1.0, 2.0};
  // K15 integrates degree 22 exactly.
  const auto r = integrate_panels([](double x) { return std::pow(x, 10) - 3 * x * x + 1; }, bp);
  const double exact = (std::pow(2.0, 11) + 1.0) / 11.0 - (8.0 + 1.0) + 3.0;
  EXPECT_NEAR(r.value, exact, 1e-12 * std::abs(exact));
}

TEST(Quadrature, NarrowLorentzianClosedForm) {
  const double x0 = 0.3, g = 1e-6;
  auto f = [&](double x) { return g / ((x - x0) * (x - x0) + g * g); };
  const double exact = std::atan((1.0 - x0) / g) - std::atan((0.0 - x0) / g);
  const double with_center[] = {0.0, x0, 1.0};
  const auto r = integrate_panels(f, with_center, {1e-10, 0.0, 2000});
  EXPECT_NEAR(r.value, exact, 1e-9 * exact);
  EXPECT_LE(r.error, 1e-10 * exact * 1.0001);
}

TEST(Quadrature, StepAtBreakpoint) {
  const double bp[] = {0.0, 0.25, 1.0};
  const auto r = integrate_panels([](double x) { return x < 0.25 ? 0.0 : std::exp(x); }, bp);
  EXPECT_NEAR(r.value, std::exp(1.0) - std::exp(0.25), 1e-12);
}

TEST(Quadrature, DegenerateBreakpoints) {
  const double none[] = {1.0};
  EXPECT_EQ(integrate_panels([](double) { return 1.0; }, none).value, 0.0);
  const double repeated[] = {0.0, 0.0, 1.0, 1.0};
  EXPECT_NEAR(integrate_panels([](double) { return 2.0; }, repeated).value, 2.0, 1e-15);
}

TEST(Quadrature, SubdivisionLimitCarriesEstimate) {
  const double bp[] = {0.0, 1.0};
  auto f = [](double x) { return 1.0 / std::sqrt(std::abs(x - 0.3712)); };
  try {
    integrate_panels(f, bp, {1e-14, 0.0, 5});
    FAIL() << "expected QuadratureError";
  } catch (const QuadratureError& e) {
    EXPECT_GT(e.estimate(), 0.0);
    EXPECT_GT(e.error_bound(), 0.0);
  }
}

TEST(Brent, FindsRootInsideBracket) {
  auto f = [](double x) { return std::cos(x) - x; };
  const auto r = brent_solve(f, 0.0, 1.0, f(0.0), f(1.0), 1e-15, 0.0);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.x, 0.7390851332151607, 1e-14);
  EXPECT_LE(r.a, r.x);
  EXPECT_GE(r.b, r.x);
}

TEST(Brent, RejectsNonBracket) {
  auto f = [](double x) { return x * x + 1.0; };
  EXPECT_FALSE(brent_solve(f, -1.0, 1.0, f(-1.0), f(1.0), 1e-12, 0.0).converged);
}

TEST(Brent, EndpointRoot) {
  auto f = [](double x) { return x - 2.0; };
  const auto r = brent_solve(f, 2.0, 3.0, 0.0, 1.0, 1e-12, 0.0);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.x, 2.0);
}
