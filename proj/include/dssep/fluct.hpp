#pragma once

// Ornstein-Uhlenbeck reference quantities for the fluctuation field: heat
// semigroups on the line (T_t) and on the two half-lines with Neumann
// condition at 0 (T_t^Neu), the conditional law of Y_t(H) given Y_s and the
// limiting quadratic variation of the martingales.

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dssep/error.hpp"
#include "dssep/test_function.hpp"

namespace dssep {

enum class LineRegime { line, line_neumann };

inline const char* to_string(LineRegime r) { return r == LineRegime::line ? "line" : "line-neumann"; }

namespace detail {

inline constexpr double quad_tol = 1e-11;

template <class F>
double integrate(F f, double a, double b, unsigned depth = 15) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, depth, quad_tol, &err);
}

// (1/sqrt(pi)) int e^{-z^2} f(u + 2 sqrt(t) z) dz, with the z range clipped
// to where f can be nonzero ([-reach, reach]) and to |z| <= 9. `kink` is a
// point where f may lose smoothness; the integral is split there.
template <class F>
double gaussian_smooth(F f, double u, double t, double reach, double kink) {
  const double s = 2.0 * std::sqrt(t);
  const double lo = std::max(-9.0, (-reach - u) / s);
  const double hi = std::min(9.0, (reach - u) / s);
  if (!(hi > lo)) return 0.0;
  auto g = [&](double z) { return std::exp(-z * z) * f(u + s * z); };
  const double zk = (kink - u) / s;
  double v = 0.0;
  if (zk > lo && zk < hi) {
    v = integrate(g, lo, zk) + integrate(g, zk, hi);
  } else {
    v = integrate(g, lo, hi);
  }
  return v / std::sqrt(M_PI);
}

}  // namespace detail

// T_t H for H on the line. Derivatives commute with T_t, so the k-th
// derivative is T_t applied to H^(k). line-neumann treats each half-line on
// its own: the piece on (0,inf) is extended evenly to the line and smoothed,
// and likewise the piece on (-inf,0).
inline TestFunction semigroup(LineRegime regime, const TestFunction& h, double t) {
  if (!(t >= 0.0)) throw DomainError("semigroup time must be nonnegative");
  if (h.support() != Support::line) throw DomainError("semigroup acts on test functions of the line");
  if (t == 0.0) return h;
  const double reach = h.radius();
  const double radius = reach + 18.0 * std::sqrt(t);
  const std::string id = "T" + std::string(regime == LineRegime::line ? "" : "neu") + "[" + std::to_string(t) + "](" + h.id() + ")";
  if (regime == LineRegime::line) {
    Evaluator f = [h, t, reach](double u, int k) {
      return detail::gaussian_smooth([&](double w) { return h.derivative(w, k); }, u, t, reach, 0.0);
    };
    return TestFunction::line(id, h.function_class(), std::move(f), radius);
  }
  Evaluator right = [h, t, reach](double u, int k) {
    const double sign = (k % 2) ? -1.0 : 1.0;
    auto even = [&](double w) { return w >= 0.0 ? h.right_piece(w, k) : sign * h.right_piece(-w, k); };
    return detail::gaussian_smooth(even, u, t, reach, 0.0);
  };
  Evaluator left = [h, t, reach](double u, int k) {
    const double sign = (k % 2) ? -1.0 : 1.0;
    auto even = [&](double w) { return w <= 0.0 ? h.left_piece(w, k) : sign * h.left_piece(-w, k); };
    return detail::gaussian_smooth(even, u, t, reach, 0.0);
  };
  return TestFunction::line_sided(id, h.function_class(), std::move(left), std::move(right), radius);
}

// int (H^(k))^2 over the support, split at 0 so one-sided pieces are used.
inline double squared_norm(const TestFunction& h, int k = 0) {
  auto sq = [&](double u) {
    const double d = h.derivative(u, k);
    return d * d;
  };
  if (h.support() == Support::unit) return detail::integrate(sq, 0.0, 1.0);
  const double r = h.radius();
  auto right = [&](double u) {
    const double d = h.right_piece(u, k);
    return d * d;
  };
  auto left = [&](double u) {
    const double d = h.left_piece(u, k);
    return d * d;
  };
  return detail::integrate(left, -r, 0.0) + detail::integrate(right, 0.0, r);
}

struct ConditionalStats {
  TestFunction mean_operator;  // T_{t-s} H: the conditional mean is Y_s of it
  double variance = 0.0;       // int_0^{t-s} |grad T_r H|^2 dr by time quadrature
  double variance_identity = 0.0;  // (|H|^2 - |T_{t-s} H|^2) / 2
};

// Conditional law of Y_t(H) given F_s, as normalized in the OU martingale
// problem: mean Y_s(T_{t-s}H), variance int_0^{t-s} |grad T_r H|^2 dr. The
// field's own noise strength 2 chi(p) is not included.
inline ConditionalStats ou_conditional_stats(LineRegime regime, const TestFunction& h, double s, double t) {
  if (!(s >= 0.0 && t > s)) throw DomainError("need 0 <= s < t");
  const double tau = t - s;
  auto grad = [&](double r) { return squared_norm(semigroup(regime, h, r), 1); };
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(grad, 0.0, tau, 6, 1e-9, &err);
  const auto mean = semigroup(regime, h, tau);
  return {mean, v, 0.5 * (squared_norm(h) - squared_norm(mean))};
}

// 2 t chi(p) |grad H|^2, with one-sided derivatives on each half-line for
// line-neumann.
inline double limit_quadratic_variation(LineRegime regime, const TestFunction& h, double p, double t) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("density must lie in (0,1)");
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  require_class(h, regime == LineRegime::line ? FunctionClass::schwartz : FunctionClass::schwartz_neumann);
  return 2.0 * t * p * (1.0 - p) * squared_norm(h, 1);
}

// Heat kernel acting on a centred Gaussian of standard deviation sigma:
// amplitude sigma/sqrt(sigma^2 + 2t), variance sigma^2 + 2t.
inline double gaussian_heat_exact(double u, double sigma, double t) {
  const double v = sigma * sigma + 2.0 * t;
  return sigma / std::sqrt(v) * std::exp(-u * u / (2.0 * v));
}

}  // namespace dssep
