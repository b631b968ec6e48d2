#pragma once

// Numerical representatives of the test-function spaces: Schwartz functions
// on the line (optionally with a Neumann break at 0), C^2 functions on the
// torus and on [0,1], and functions satisfying the Robin interface condition
// H'(0+) = H'(0-) = c (H(0+) - H(0-)).
//
// Every function carries analytic derivatives of all orders. Line functions
// are split at 0: the right piece is used on [0, inf) (continuity from the
// right) and the left piece on (-inf, 0). Functions on [0,1] read
// H(0+) = H(0) and H(0-) = H(1).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dssep/error.hpp"

namespace dssep {

enum class FunctionClass { schwartz, schwartz_neumann, torus_c2, interval_c2, robin_admissible };

inline const char* to_string(FunctionClass c) {
  switch (c) {
    case FunctionClass::schwartz: return "schwartz";
    case FunctionClass::schwartz_neumann: return "schwartz-neumann";
    case FunctionClass::torus_c2: return "torus-C2";
    case FunctionClass::interval_c2: return "interval-C2";
    case FunctionClass::robin_admissible: return "robin-admissible";
  }
  return "?";
}

enum class Support { line, unit };

// f(u, k) = k-th derivative at u.
using Evaluator = std::function<double(double, int)>;

// Probabilists' Hermite polynomial He_m(z).
inline double hermite(int m, double z) {
  if (m == 0) return 1.0;
  double a = 1.0, b = z;
  for (int j = 1; j < m; ++j) {
    const double c = z * b - j * a;
    a = b;
    b = c;
  }
  return b;
}

// amp * He_j(z) exp(-z^2/2) with z = (u - mu)/s. Its k-th derivative is
// amp * (-1)^k s^-k He_{j+k}(z) exp(-z^2/2).
struct HermiteAtom {
  double amp = 1.0;
  double mu = 0.0;
  double s = 1.0;
  int j = 0;

  double operator()(double u, int k) const {
    const double z = (u - mu) / s;
    const double sign = (k % 2) ? -1.0 : 1.0;
    return amp * sign * std::pow(s, -k) * hermite(j + k, z) * std::exp(-0.5 * z * z);
  }
  double reach() const { return std::abs(mu) + 10.0 * s; }
};

inline Evaluator atoms(std::vector<HermiteAtom> list) {
  return [list = std::move(list)](double u, int k) {
    double v = 0.0;
    for (const auto& a : list) v += a(u, k);
    return v;
  };
}

inline double reach(const std::vector<HermiteAtom>& list) {
  double r = 0.0;
  for (const auto& a : list) r = std::max(r, a.reach());
  return r;
}

// sup |u|^k |H^(l)(u)| for k, l <= 4, sampled on [-radius, radius], plus
// the largest |H^(l)| seen beyond the radius.
struct DecayCertificate {
  double radius = 0.0;
  std::array<std::array<double, 5>, 5> seminorm{};
  double tail = 0.0;
  bool valid = false;
};

class TestFunction {
 public:
  TestFunction() = default;

  // Smooth function on the line.
  static TestFunction line(std::string id, FunctionClass cls, Evaluator f, double radius) {
    return line_sided(std::move(id), cls, f, f, radius);
  }

  static TestFunction line_sided(std::string id, FunctionClass cls, Evaluator left, Evaluator right, double radius) {
    TestFunction h;
    h.id_ = std::move(id);
    h.cls_ = cls;
    h.support_ = Support::line;
    h.left_ = std::move(left);
    h.right_ = std::move(right);
    h.radius_ = radius;
    return h;
  }

  // Function on [0,1] (periodically extended when evaluated off it).
  static TestFunction unit(std::string id, FunctionClass cls, Evaluator f, double robin_c = 0.0) {
    TestFunction h;
    h.id_ = std::move(id);
    h.cls_ = cls;
    h.support_ = Support::unit;
    h.right_ = std::move(f);
    h.left_ = h.right_;
    h.radius_ = 1.0;
    h.robin_c_ = robin_c;
    return h;
  }

  const std::string& id() const { return id_; }
  FunctionClass function_class() const { return cls_; }
  Support support() const { return support_; }
  double radius() const { return radius_; }
  double robin_coefficient() const { return robin_c_; }

  double operator()(double u) const { return derivative(u, 0); }

  double derivative(double u, int k) const {
    if (support_ == Support::unit) {
      u -= std::floor(u);
      return right_(u, k);
    }
    return u < 0.0 ? left_(u, k) : right_(u, k);
  }

  double zero_plus(int k = 0) const { return right_(0.0, k); }
  double zero_minus(int k = 0) const { return support_ == Support::unit ? right_(1.0, k) : left_(0.0, k); }

  // Value of a one-sided piece, even on the far side of 0 (used to build
  // reflections).
  double left_piece(double u, int k) const { return left_(u, k); }
  double right_piece(double u, int k) const { return right_(u, k); }

  // k-th derivative as a test function; on the line the derivative is taken
  // on each side separately (the Neumann operators). The class tag is
  // inherited; use member_of to check it.
  TestFunction derived(int k, std::string id) const {
    TestFunction h = *this;
    h.id_ = std::move(id);
    auto l = left_, r = right_;
    h.left_ = [l, k](double u, int j) { return l(u, j + k); };
    h.right_ = [r, k](double u, int j) { return r(u, j + k); };
    h.certificate_.reset();
    return h;
  }

  TestFunction scaled(double a, std::string id) const {
    TestFunction h = *this;
    h.id_ = std::move(id);
    auto l = left_, r = right_;
    h.left_ = [l, a](double u, int j) { return a * l(u, j); };
    h.right_ = [r, a](double u, int j) { return a * r(u, j); };
    h.certificate_.reset();
    return h;
  }

  // max |H| sampled on the support.
  double max_abs() const {
    const double lo = support_ == Support::unit ? 0.0 : -radius_;
    const double hi = support_ == Support::unit ? 1.0 : radius_;
    double m = 0.0;
    for (int i = 0; i <= 20000; ++i) m = std::max(m, std::abs(derivative(lo + (hi - lo) * i / 20000.0, 0)));
    return m;
  }

  const DecayCertificate& certificate() const {
    if (!certificate_) certificate_ = std::make_shared<DecayCertificate>(compute_certificate());
    return *certificate_;
  }

 private:
  DecayCertificate compute_certificate() const {
    DecayCertificate c;
    c.radius = radius_;
    if (support_ == Support::unit) {
      c.valid = true;
      return c;
    }
    const int grid = 8001;
    double peak = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double u = -radius_ + 2.0 * radius_ * i / (grid - 1);
      for (int l = 0; l <= 4; ++l) {
        const double d = std::abs(derivative(u, l));
        peak = std::max(peak, d);
        for (int k = 0; k <= 4; ++k) c.seminorm[k][l] = std::max(c.seminorm[k][l], std::pow(std::abs(u), k) * d);
      }
    }
    for (int i = 0; i <= 200; ++i) {
      const double u = radius_ * (1.0 + 0.5 * i / 200.0);
      for (int l = 0; l <= 4; ++l) c.tail = std::max({c.tail, std::abs(derivative(u, l)), std::abs(derivative(-u, l))});
    }
    c.valid = c.tail <= 1e-10 * std::max(peak, 1e-300);
    return c;
  }

  std::string id_;
  FunctionClass cls_ = FunctionClass::schwartz;
  Support support_ = Support::line;
  Evaluator left_, right_;
  double radius_ = 0.0;
  double robin_c_ = 0.0;
  mutable std::shared_ptr<DecayCertificate> certificate_;
};

// Numerical class membership, tolerance 1e-8 on the defining identities.
inline bool member_of(const TestFunction& h, FunctionClass cls, double tol = 1e-8) {
  switch (cls) {
    case FunctionClass::schwartz:
      if (h.support() != Support::line || !h.certificate().valid) return false;
      for (int k = 0; k <= 4; ++k)
        if (std::abs(h.zero_plus(k) - h.zero_minus(k)) > tol) return false;
      return true;
    case FunctionClass::schwartz_neumann:
      if (h.support() != Support::line || !h.certificate().valid) return false;
      for (int k : {1, 3})
        if (std::abs(h.zero_plus(k)) > tol || std::abs(h.zero_minus(k)) > tol) return false;
      return true;
    case FunctionClass::torus_c2:
      if (h.support() != Support::unit) return false;
      for (int k = 0; k <= 2; ++k)
        if (std::abs(h.zero_plus(k) - h.zero_minus(k)) > tol) return false;
      return true;
    case FunctionClass::interval_c2:
      if (h.support() != Support::unit) return false;
      for (int k = 0; k <= 2; ++k)
        if (!std::isfinite(h.zero_plus(k)) || !std::isfinite(h.zero_minus(k))) return false;
      return true;
    case FunctionClass::robin_admissible: {
      if (h.support() != Support::unit) return false;
      const double flux = h.robin_coefficient() * (h.zero_plus() - h.zero_minus());
      return std::abs(h.zero_plus(1) - flux) <= tol && std::abs(h.zero_minus(1) - flux) <= tol;
    }
  }
  return false;
}

inline void require_class(const TestFunction& h, FunctionClass cls) {
  if (!member_of(h, cls))
    throw TestFunctionClassError("test function " + h.id() + " is not " + to_string(cls));
}

// Derivative operators. On the line they act on each side separately, which
// is how the Neumann operators are defined; for smooth H they coincide with
// the ordinary derivatives.
inline TestFunction nabla(const TestFunction& h) { return h.derived(1, "d(" + h.id() + ")"); }
inline TestFunction laplacian(const TestFunction& h) { return h.derived(2, "d2(" + h.id() + ")"); }

// Catalog constructors.

// amp * exp(-(u-mu)^2 / (2 s^2)).
inline TestFunction gaussian(double s, double amp = 1.0, double mu = 0.0) {
  std::vector<HermiteAtom> a{{amp, mu, s, 0}};
  return TestFunction::line("gauss:" + std::to_string(s), mu == 0.0 ? FunctionClass::schwartz_neumann
                                                                     : FunctionClass::schwartz,
                            atoms(a), reach(a));
}

// Centred Gaussians with independent amplitude and width on each side.
inline TestFunction neumann_bump(double amp_left, double s_left, double amp_right, double s_right) {
  std::vector<HermiteAtom> l{{amp_left, 0.0, s_left, 0}}, r{{amp_right, 0.0, s_right, 0}};
  return TestFunction::line_sided("neumann:" + std::to_string(amp_left) + ":" + std::to_string(s_left) + ":" +
                                      std::to_string(amp_right) + ":" + std::to_string(s_right),
                                  FunctionClass::schwartz_neumann, atoms(l), atoms(r),
                                  std::max(reach(l), reach(r)));
}

// Trigonometric polynomial sum a_j cos(2 pi j u) + b_j sin(2 pi j u) on [0,1).
inline Evaluator trig(std::vector<std::pair<int, std::pair<double, double>>> terms) {
  return [terms = std::move(terms)](double u, int k) {
    double v = 0.0;
    for (const auto& [j, ab] : terms) {
      const double w = 2.0 * M_PI * j;
      const double phase = w * u + k * M_PI / 2.0;
      const double scale = k == 0 ? 1.0 : std::pow(w, k);
      if (j == 0) {
        v += k == 0 ? ab.first : 0.0;
        continue;
      }
      v += scale * (ab.first * std::cos(phase) + ab.second * std::sin(phase));
    }
    return v;
  };
}

// Polynomial with the given coefficients (c0 + c1 u + ...).
inline Evaluator polynomial(std::vector<double> c) {
  return [c = std::move(c)](double u, int k) {
    double v = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k); i < c.size(); ++i) {
      double f = 1.0;
      for (int j = 0; j < k; ++j) f *= static_cast<double>(i - static_cast<std::size_t>(j));
      v += c[i] * f * std::pow(u, static_cast<double>(i - static_cast<std::size_t>(k)));
    }
    return v;
  };
}

inline Evaluator sum(Evaluator a, Evaluator b) {
  return [a = std::move(a), b = std::move(b)](double u, int k) { return a(u, k) + b(u, k); };
}

// s u + D (3u^2 - 2u^3) with D = -s (1+c)/c: H(0) = 0, H(1) = s + D and
// H'(0) = H'(1) = s = c (H(0) - H(1)).
inline TestFunction robin_cubic(double c, double s = 1.0) {
  if (!(c > 0.0)) throw DomainError("Robin coefficient must be positive");
  const double d = -s * (1.0 + c) / c;
  return TestFunction::unit("robin-cubic:" + std::to_string(s), FunctionClass::robin_admissible,
                            polynomial({0.0, s, 3.0 * d, -2.0 * d}), c);
}

inline std::vector<TestFunction> catalog(FunctionClass cls, double robin_c = 1.0) {
  using A = std::vector<HermiteAtom>;
  std::vector<TestFunction> out;
  const double r2 = 1.0 / std::sqrt(2.0);
  switch (cls) {
    case FunctionClass::schwartz: {
      auto add = [&](std::string id, A a) {
        out.push_back(TestFunction::line(std::move(id), cls, atoms(a), reach(a)));
      };
      add("exp(-u^2)", {{1.0, 0.0, r2, 0}});
      add("gauss-0.05", {{1.0, 0.0, 0.05, 0}});
      add("u*exp(-u^2)", {{r2, 0.0, r2, 1}});
      add("hermite2", {{1.0, 0.0, 0.5, 2}});
      add("gauss-shifted", {{1.0, 0.5, 0.3, 0}});
      add("gauss-mix", {{1.0, 0.0, r2, 0}, {-0.5, -1.0, 0.2, 0}});
      break;
    }
    case FunctionClass::schwartz_neumann: {
      auto add = [&](std::string id, A l, A r) {
        const double rad = std::max(reach(l), reach(r));
        out.push_back(TestFunction::line_sided(std::move(id), cls, atoms(l), atoms(r), rad));
      };
      add("exp(-u^2)", {{1.0, 0.0, r2, 0}}, {{1.0, 0.0, r2, 0}});
      add("gauss-0.05", {{1.0, 0.0, 0.05, 0}}, {{1.0, 0.0, 0.05, 0}});
      add("one-sided", {{0.0, 0.0, 1.0, 0}}, {{1.0, 0.0, 0.3, 0}});
      add("two-sided", {{0.5, 0.0, 0.2, 0}}, {{1.0, 0.0, 0.4, 0}});
      add("reflected-pair", {{1.0, 0.6, 0.25, 0}, {1.0, -0.6, 0.25, 0}},
          {{1.0, 0.6, 0.25, 0}, {1.0, -0.6, 0.25, 0}});
      add("hermite2-sided", {{-0.3, 0.0, 0.3, 0}}, {{1.0, 0.0, 0.5, 2}});
      break;
    }
    case FunctionClass::torus_c2:
      out.push_back(TestFunction::unit("cos(2pi u)", cls, trig({{1, {1.0, 0.0}}})));
      out.push_back(TestFunction::unit("sin(2pi u)", cls, trig({{1, {0.0, 1.0}}})));
      out.push_back(TestFunction::unit("cos(4pi u)+sin(2pi u)/2", cls, trig({{2, {1.0, 0.0}}, {1, {0.0, 0.5}}})));
      out.push_back(TestFunction::unit("1", cls, trig({{0, {1.0, 0.0}}})));
      out.push_back(TestFunction::unit("trig-mix", cls, trig({{0, {0.5, 0.0}}, {1, {0.25, 0.0}}, {3, {0.0, -0.1}}})));
      break;
    case FunctionClass::interval_c2:
      out.push_back(TestFunction::unit("u", cls, polynomial({0.0, 1.0})));
      out.push_back(TestFunction::unit("u^2", cls, polynomial({0.0, 0.0, 1.0})));
      out.push_back(TestFunction::unit("u(1-u)^2", cls, polynomial({0.0, 1.0, -2.0, 1.0})));
      out.push_back(TestFunction::unit("cos(pi u)", cls, [](double u, int k) {
        return std::pow(M_PI, k) * std::cos(M_PI * u + k * M_PI / 2.0);
      }));
      out.push_back(TestFunction::unit("exp(u)", cls, [](double u, int) { return std::exp(u); }));
      break;
    case FunctionClass::robin_admissible:
      out.push_back(robin_cubic(robin_c, 1.0));
      out.push_back(robin_cubic(robin_c, -0.5));
      out.push_back(TestFunction::unit("cos(2pi u)", cls, trig({{1, {1.0, 0.0}}}), robin_c));
      out.push_back(TestFunction::unit("1", cls, trig({{0, {1.0, 0.0}}}), robin_c));
      {
        const double d = -(1.0 + robin_c) / robin_c;
        out.push_back(TestFunction::unit("robin-cubic+cos(4pi u)", cls,
                                         sum(polynomial({0.0, 1.0, 3.0 * d, -2.0 * d}), trig({{2, {0.3, 0.0}}})),
                                         robin_c));
      }
      break;
  }
  return out;
}

}  // namespace dssep
