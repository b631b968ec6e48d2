#include <gtest/gtest.h>

#include <cmath>

#include "dssep/fluct.hpp"
#include "dssep/test_function.hpp"

using namespace dssep;

TEST(Semigroup, ZeroTimeIsIdentity) {
  const auto h = catalog(FunctionClass::schwartz)[2];
  const auto t0 = semigroup(LineRegime::line, h, 0.0);
  for (double u : {-1.3, 0.0, 0.4}) EXPECT_EQ(t0(u), h(u));
  EXPECT_THROW(semigroup(LineRegime::line, h, -0.1), DomainError);
  EXPECT_THROW(semigroup(LineRegime::line, catalog(FunctionClass::torus_c2).front(), 0.1), DomainError);
}

TEST(Semigroup, GaussianClosedForm) {
  for (double sigma : {0.05, 0.3, 1.0}) {
    const auto h = gaussian(sigma);
    for (double t : {1e-4, 0.01, 0.2}) {
      const auto th = semigroup(LineRegime::line, h, t);
      double worst = 0.0;
      for (int i = -40; i <= 40; ++i) {
        const double u = i * (sigma + std::sqrt(t)) / 8.0;
        worst = std::max(worst, std::abs(th(u) - gaussian_heat_exact(u, sigma, t)));
      }
      EXPECT_LT(worst, 1e-6) << "sigma " << sigma << " t " << t;
    }
  }
}

TEST(Semigroup, DerivativeCommutes) {
  const auto h = gaussian(0.4);
  const auto th = semigroup(LineRegime::line, h, 0.05);
  const double v = 0.4 * 0.4 + 0.1;
  for (double u : {-0.5, 0.2, 0.9}) {
    const double exact = -u / v * gaussian_heat_exact(u, 0.4, 0.05);
    EXPECT_NEAR(th.derivative(u, 1), exact, 1e-8);
  }
}

TEST(Semigroup, SemigroupProperty) {
  const auto h = catalog(FunctionClass::schwartz)[5];
  const auto ab = semigroup(LineRegime::line, semigroup(LineRegime::line, h, 0.02), 0.03);
  const auto direct = semigroup(LineRegime::line, h, 0.05);
  for (double u : {-1.0, -0.2, 0.0, 0.7}) EXPECT_NEAR(ab(u), direct(u), 1e-7);
}

TEST(Semigroup, EvenFunctionNeumannEqualsLine) {
  const auto h = catalog(FunctionClass::schwartz_neumann).front();
  const auto a = semigroup(LineRegime::line, h, 0.1);
  const auto b = semigroup(LineRegime::line_neumann, h, 0.1);
  for (double u : {-2.0, -0.3, -1e-6, 0.0, 0.5, 1.7}) EXPECT_NEAR(a(u), b(u), 1e-9);
}

// Half-line heat flow with reflection: for data only on (0, inf) nothing
// leaks to (-inf, 0) and the mass on (0, inf) is conserved.
TEST(Semigroup, NeumannKeepsSidesApart) {
  const auto h = catalog(FunctionClass::schwartz_neumann)[2];  // one-sided
  const auto th = semigroup(LineRegime::line_neumann, h, 0.05);
  EXPECT_EQ(th(-0.2), 0.0);
  const double before = detail::integrate([&](double u) { return h(u); }, 0.0, h.radius());
  const double after = detail::integrate([&](double u) { return th(u); }, 0.0, th.radius());
  EXPECT_NEAR(after, before, 1e-8);
  EXPECT_NEAR(th.zero_plus(1), 0.0, 1e-8);
}

TEST(OuStats, VarianceTwoWays) {
  for (auto regime : {LineRegime::line, LineRegime::line_neumann}) {
    const auto h = gaussian(0.5);
    const auto st = ou_conditional_stats(regime, h, 0.1, 0.3);
    EXPECT_NEAR(st.variance, st.variance_identity, 1e-6);
  }
  const auto sided = catalog(FunctionClass::schwartz_neumann)[3];
  const auto st = ou_conditional_stats(LineRegime::line_neumann, sided, 0.0, 0.2);
  EXPECT_NEAR(st.variance, st.variance_identity, 1e-6);
}

TEST(OuStats, DegenerateAndLongTimeLimits) {
  const auto h = gaussian(0.5);
  const auto near = ou_conditional_stats(LineRegime::line, h, 1.0, 1.0 + 1e-8);
  EXPECT_LT(near.variance, 1e-6);
  EXPECT_NEAR(near.mean_operator(0.3), h(0.3), 1e-6);
  const auto far = ou_conditional_stats(LineRegime::line, h, 0.0, 4000.0);
  EXPECT_NEAR(far.variance_identity, 0.5 * squared_norm(h), 0.01 * squared_norm(h));
  EXPECT_THROW(ou_conditional_stats(LineRegime::line, h, 0.5, 0.5), DomainError);
}

TEST(LimitQv, Examples) {
  const auto h = catalog(FunctionClass::schwartz).front();  // exp(-u^2)
  EXPECT_NEAR(limit_quadratic_variation(LineRegime::line, h, 0.5, 1.0), 0.5 * std::sqrt(M_PI / 2.0), 1e-9);
  EXPECT_NEAR(limit_quadratic_variation(LineRegime::line, h, 0.5, 1.0), 0.62666, 1e-5);
  const auto hn = catalog(FunctionClass::schwartz_neumann).front();
  EXPECT_NEAR(limit_quadratic_variation(LineRegime::line_neumann, hn, 0.5, 1.0), 0.62666, 1e-5);
  const auto zero = TestFunction::line("0", FunctionClass::schwartz, [](double, int) { return 0.0; }, 1.0);
  EXPECT_EQ(limit_quadratic_variation(LineRegime::line, zero, 0.5, 1.0), 0.0);
  const auto odd = catalog(FunctionClass::schwartz)[2];
  EXPECT_THROW(limit_quadratic_variation(LineRegime::line_neumann, odd, 0.5, 1.0), TestFunctionClassError);
}

TEST(NeumannOperators, LaplacianPreservesClassGradientDoesNot) {
  for (const auto& h : catalog(FunctionClass::schwartz_neumann)) {
    EXPECT_TRUE(member_of(laplacian(h), FunctionClass::schwartz_neumann)) << h.id();
  }
  const auto g = nabla(catalog(FunctionClass::schwartz_neumann).front());
  EXPECT_FALSE(member_of(g, FunctionClass::schwartz_neumann));
}
