#pragma once

// Reference solvers for the heat equation on the torus [0,1) with the
// defect at 0: periodic, Neumann at 0+/0- and Robin coupling
// d rho(0+) = d rho(0-) = c (rho(0+) - rho(0-)).
//
// Cell-centred finite volumes with m cells; cell i covers [ih, (i+1)h).
// The interface sits on the seam between cell m-1 (side 0-) and cell 0
// (side 0+). The three regimes differ only in the seam conductance kappa:
// 1/h (periodic), 0 (Neumann) and c/(1+ch) (Robin, the series resistance of
// the interface and two half cells). Time stepping is a theta scheme.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "dssep/error.hpp"
#include "dssep/measures.hpp"
#include "dssep/test_function.hpp"

namespace dssep {

enum class Regime { periodic, neumann, robin };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::periodic: return "periodic";
    case Regime::neumann: return "neumann";
    case Regime::robin: return "robin";
  }
  return "?";
}

enum class TimeScheme { crank_nicolson, backward_euler, explicit_euler };

struct BoundaryRegime {
  Regime regime = Regime::periodic;
  double c = 0.0;  // Robin coefficient

  static BoundaryRegime periodic() { return {Regime::periodic, 0.0}; }
  static BoundaryRegime neumann() { return {Regime::neumann, 0.0}; }
  static BoundaryRegime robin(double c) {
    if (!(c >= 0.0)) throw DomainError("Robin coefficient must be nonnegative");
    return {Regime::robin, c};
  }

  double seam_conductance(double h) const {
    switch (regime) {
      case Regime::periodic: return 1.0 / h;
      case Regime::neumann: return 0.0;
      case Regime::robin: return c / (1.0 + c * h);
    }
    return 0.0;
  }
};

struct PdeSolution {
  BoundaryRegime boundary;
  std::size_t m = 0;
  double h = 0.0;
  double dt = 0.0;  // requested step (segments are split evenly, never longer)
  TimeScheme scheme = TimeScheme::crank_nicolson;
  int spatial_order = 2;
  double stability_bound = std::numeric_limits<double>::infinity();

  std::vector<double> times;
  std::vector<std::vector<double>> rho;       // cell values at each output time
  std::vector<std::vector<double>> integral;  // int_0^t rho ds per cell
  std::vector<double> plus, minus;            // rho(t, 0+), rho(t, 0-)
  std::vector<double> plus_integral, minus_integral;
  std::vector<double> flux;  // seam flux from 0- to 0+

  double center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * h; }

  std::size_t time_index(double t, double tol = 1e-12) const {
    for (std::size_t j = 0; j < times.size(); ++j)
      if (std::abs(times[j] - t) <= tol * std::max(1.0, t)) return j;
    throw AlignmentError("time " + std::to_string(t) + " is not an output time of the PDE solution");
  }

  // rho(t_j, u) by linear interpolation; u in [0,1] with u = 0 read as 0+
  // and u = 1 as 0-.
  double at(std::size_t j, double u) const {
    const auto& r = rho[j];
    const double s = u / h - 0.5;
    if (s >= 0.0 && s <= static_cast<double>(m - 1)) {
      const auto i = std::min(static_cast<std::size_t>(s), m - 2);
      const double w = s - static_cast<double>(i);
      return (1.0 - w) * r[i] + w * r[i + 1];
    }
    if (boundary.regime == Regime::periodic) {
      // Between the last and first centres, across the seam.
      const double w = s < 0.0 ? s + 1.0 : s - static_cast<double>(m - 1);
      return (1.0 - w) * r[m - 1] + w * r[0];
    }
    if (s < 0.0) {
      const double w = (s + 0.5) / 0.5;
      return (1.0 - w) * plus[j] + w * r[0];
    }
    const double w = (s - static_cast<double>(m - 1)) / 0.5;
    return (1.0 - w) * r[m - 1] + w * minus[j];
  }

  double mass(std::size_t j) const { return h * std::accumulate(rho[j].begin(), rho[j].end(), 0.0); }
};

// Cell values of a profile: midpoint samples, or cell averages by Simpson's
// rule (better for discontinuous data aligned with cell edges).
inline std::vector<double> cell_values(const InitialProfile& gamma, std::size_t m, bool average = true) {
  std::vector<double> v(m);
  const double h = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double a = i * h, b = (i + 1) * h, c = 0.5 * (a + b);
    if (!average) {
      v[i] = gamma(c);
      continue;
    }
    // Composite Simpson on 8 panels; endpoints nudged into the cell.
    const int panels = 8;
    double s = 0.0;
    for (int k = 0; k <= panels; ++k) {
      double u = a + (b - a) * k / panels;
      if (k == 0) u = a + 1e-12 * h;
      if (k == panels) u = b - 1e-12 * h;
      const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      s += w * gamma(u);
    }
    v[i] = s / (3.0 * panels);
  }
  return v;
}

inline std::vector<double> cell_values(const std::function<double(double)>& f, std::size_t m) {
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = f((static_cast<double>(i) + 0.5) / static_cast<double>(m));
  return v;
}

namespace detail {

// Solves the cyclic tridiagonal system
//   lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]
// with x[-1] = x[m-1] and x[m] = x[0] through corner coefficient `corner`
// (both corners equal, symmetric operator). Thomas algorithm; the cyclic
// case uses Sherman-Morrison.
class CyclicSolver {
 public:
  CyclicSolver(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper, double corner)
      : lower_(std::move(lower)), diag_(std::move(diag)), upper_(std::move(upper)), corner_(corner) {
    const std::size_t m = diag_.size();
    if (corner_ != 0.0) {
      gamma_ = -diag_[0];
      diag_[0] -= gamma_;
      diag_[m - 1] -= corner_ * corner_ / gamma_;
      u_.assign(m, 0.0);
      u_[0] = gamma_;
      u_[m - 1] = corner_;
      z_ = thomas(u_);
    }
  }

  std::vector<double> solve(const std::vector<double>& rhs) const {
    std::vector<double> y = thomas(rhs);
    if (corner_ == 0.0) return y;
    const std::size_t m = diag_.size();
    // v = (1, 0, ..., 0, corner/gamma)
    const double vy = y[0] + corner_ / gamma_ * y[m - 1];
    const double vz = z_[0] + corner_ / gamma_ * z_[m - 1];
    const double f = vy / (1.0 + vz);
    for (std::size_t i = 0; i < m; ++i) y[i] -= f * z_[i];
    return y;
  }

 private:
  std::vector<double> thomas(const std::vector<double>& rhs) const {
    const std::size_t m = diag_.size();
    std::vector<double> c(m), d(m);
    c[0] = upper_[0] / diag_[0];
    d[0] = rhs[0] / diag_[0];
    for (std::size_t i = 1; i < m; ++i) {
      const double den = diag_[i] - lower_[i] * c[i - 1];
      c[i] = i + 1 < m ? upper_[i] / den : 0.0;
      d[i] = (rhs[i] - lower_[i] * d[i - 1]) / den;
    }
    std::vector<double> x(m);
    x[m - 1] = d[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
  }

  std::vector<double> lower_, diag_, upper_;
  double corner_ = 0.0;
  double gamma_ = 0.0;
  std::vector<double> u_, z_;
};

// y = A x for the finite-volume Laplacian with seam conductance kappa.
inline void apply_laplacian(const std::vector<double>& x, double h, double kappa, std::vector<double>& y) {
  const std::size_t m = x.size();
  const double ih2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < m; ++i) y[i] = (x[i - 1] - 2.0 * x[i] + x[i + 1]) * ih2;
  const double seam = kappa * (x[m - 1] - x[0]) / h;  // flux into cell 0, times 1/h
  y[0] = (x[1] - x[0]) * ih2 + seam;
  y[m - 1] = (x[m - 2] - x[m - 1]) * ih2 - seam;
}

}  // namespace detail

// Solves rho_t = rho_uu from rho0 (cell values) and records the solution at
// t = 0 and each output time (sorted, positive).
inline PdeSolution solve(const BoundaryRegime& boundary, const std::vector<double>& rho0,
                         const std::vector<double>& output_times, double dt,
                         TimeScheme scheme = TimeScheme::crank_nicolson) {
  const std::size_t m = rho0.size();
  if (m < 4) throw DomainError("PDE grid needs at least 4 cells");
  for (double v : rho0)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("initial density must lie in [0,1]");
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  double prev = 0.0;
  for (double t : output_times) {
    if (!(t > prev)) throw DomainError("output times must be positive and increasing");
    prev = t;
  }

  PdeSolution sol;
  sol.boundary = boundary;
  sol.m = m;
  sol.h = 1.0 / static_cast<double>(m);
  sol.dt = dt;
  sol.scheme = scheme;
  const double h = sol.h;
  const double kappa = boundary.seam_conductance(h);
  if (scheme == TimeScheme::explicit_euler) {
    // Largest diagonal of -A is 2/h^2 in the bulk, (1 + kappa h)/h^2 at the seam.
    sol.stability_bound = h * h / std::max(2.0, 1.0 + kappa * h);
    if (dt > sol.stability_bound * (1.0 + 1e-12))
      throw StabilityError("explicit step " + std::to_string(dt) + " exceeds the bound " +
                           std::to_string(sol.stability_bound));
  }

  auto interface = [&](const std::vector<double>& r, double& plus, double& minus, double& flux) {
    flux = kappa * (r[m - 1] - r[0]);
    plus = r[0] + flux * h / 2.0;
    minus = r[m - 1] - flux * h / 2.0;
    if (boundary.regime == Regime::periodic) plus = minus = 0.5 * (r[0] + r[m - 1]);
  };

  std::vector<double> rho = rho0, integ(m, 0.0), ax(m), rhs(m);
  double plus_int = 0.0, minus_int = 0.0;
  auto record = [&](double t) {
    double p, q, f;
    interface(rho, p, q, f);
    sol.times.push_back(t);
    sol.rho.push_back(rho);
    sol.integral.push_back(integ);
    sol.plus.push_back(p);
    sol.minus.push_back(q);
    sol.flux.push_back(f);
    sol.plus_integral.push_back(plus_int);
    sol.minus_integral.push_back(minus_int);
  };
  record(0.0);

  // One theta step of size k. The cell integrals use the same theta
  // weighting, so rho^N - rho^0 = A * integral holds exactly.
  struct Stepper {
    double k, theta;
    std::unique_ptr<detail::CyclicSolver> solver;
  };
  auto make_stepper = [&](double k, double theta) {
    Stepper s{k, theta, nullptr};
    if (theta > 0.0) {
      const double a = theta * k / (h * h);
      std::vector<double> lo(m, -a), di(m, 1.0 + 2.0 * a), up(m, -a);
      const double seam = theta * k * kappa / h;
      di[0] = 1.0 + a + seam;
      di[m - 1] = 1.0 + a + seam;
      lo[0] = 0.0;
      up[m - 1] = 0.0;
      s.solver = std::make_unique<detail::CyclicSolver>(lo, di, up, -seam);
    }
    return s;
  };
  auto step = [&](const Stepper& s) {
    std::vector<double> old = rho;
    double p0, q0, f0;
    interface(old, p0, q0, f0);
    if (s.theta < 1.0) {
      detail::apply_laplacian(old, h, kappa, ax);
      for (std::size_t i = 0; i < m; ++i) rhs[i] = old[i] + (1.0 - s.theta) * s.k * ax[i];
    } else {
      rhs = old;
    }
    rho = s.theta > 0.0 ? s.solver->solve(rhs) : rhs;
    double p1, q1, f1;
    interface(rho, p1, q1, f1);
    for (std::size_t i = 0; i < m; ++i) integ[i] += s.k * (s.theta * rho[i] + (1.0 - s.theta) * old[i]);
    plus_int += s.k * (s.theta * p1 + (1.0 - s.theta) * p0);
    minus_int += s.k * (s.theta * q1 + (1.0 - s.theta) * q0);
  };

  const double theta = scheme == TimeScheme::crank_nicolson ? 0.5 : scheme == TimeScheme::backward_euler ? 1.0 : 0.0;
  double t = 0.0;
  bool started = false;
  for (double target : output_times) {
    const auto steps = static_cast<std::size_t>(std::ceil((target - t) / dt - 1e-9));
    const double k = (target - t) / static_cast<double>(std::max<std::size_t>(steps, 1));
    std::size_t done = 0;
    if (!started && scheme == TimeScheme::crank_nicolson && steps >= 2) {
      // Rannacher start: two Crank-Nicolson steps become four backward Euler
      // half steps, damping the high modes of rough initial data.
      const auto be = make_stepper(k / 2.0, 1.0);
      for (int r = 0; r < 4; ++r) step(be);
      done = 2;
    }
    started = true;
    const auto st = make_stepper(k, theta);
    for (; done < steps; ++done) step(st);
    t = target;
    record(t);
  }
  return sol;
}

// Closed forms.
inline double periodic_cosine_exact(double t, double u, double mean = 0.5, double amp = 0.5, int j = 1) {
  const double w = 2.0 * M_PI * j;
  return mean + amp * std::exp(-w * w * t) * std::cos(w * u);
}

inline double neumann_cosine_exact(double t, double u, double mean = 0.5, double amp = 0.5, int j = 1) {
  const double w = M_PI * j;
  return mean + amp * std::exp(-w * w * t) * std::cos(w * u);
}

inline double max_error(const PdeSolution& sol, std::size_t j, const std::function<double(double)>& exact) {
  double e = 0.0;
  for (std::size_t i = 0; i < sol.m; ++i) e = std::max(e, std::abs(sol.rho[j][i] - exact(sol.center(i))));
  return e;
}

// h sum |rho - sigma| at output index j of each.
inline double l1_distance(const PdeSolution& a, std::size_t ja, const PdeSolution& b, std::size_t jb) {
  if (a.m != b.m) throw AlignmentError("grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.m; ++i) s += std::abs(a.rho[ja][i] - b.rho[jb][i]);
  return s * a.h;
}

// Absolute value of the weak-form identity
//   <rho_t,H> - <rho_0,H> - int <rho_s, H''> ds - boundary term
// with the boundary term present for Neumann only. Cell pairings use the
// midpoint rule. H must be admissible for the regime.
inline double weak_form_residual(const PdeSolution& sol, const TestFunction& h, std::size_t j) {
  switch (sol.boundary.regime) {
    case Regime::periodic: require_class(h, FunctionClass::torus_c2); break;
    case Regime::neumann: require_class(h, FunctionClass::interval_c2); break;
    case Regime::robin:
      require_class(h, FunctionClass::robin_admissible);
      if (std::abs(h.robin_coefficient() - sol.boundary.c) > 1e-12 * std::max(1.0, sol.boundary.c))
        throw TestFunctionClassError("test function is admissible for a different Robin coefficient");
      break;
  }
  double now = 0.0, start = 0.0, lap = 0.0;
  for (std::size_t i = 0; i < sol.m; ++i) {
    const double u = sol.center(i);
    const double hv = h(u), h2 = h.derivative(u, 2);
    now += sol.rho[j][i] * hv;
    start += sol.rho[0][i] * hv;
    lap += sol.integral[j][i] * h2;
  }
  double r = sol.h * (now - start - lap);
  if (sol.boundary.regime == Regime::neumann)
    r -= sol.plus_integral[j] * h.zero_plus(1) - sol.minus_integral[j] * h.zero_minus(1);
  return std::abs(r);
}

struct LimitPoint {
  double c = 0.0;
  double distance = 0.0;
};

// Robin solutions for c = c0, c0/10, ..., compared in L1 with the Neumann
// solution at t_end; c0 = alpha/k.
inline std::vector<LimitPoint> robin_to_neumann_limit(double alpha, int k, double t_end,
                                                      const std::vector<double>& rho0, double dt, int decades = 6) {
  if (!(alpha > 0.0) || k < 1) throw DomainError("need alpha > 0 and k >= 1");
  const auto neu = solve(BoundaryRegime::neumann(), rho0, {t_end}, dt);
  std::vector<LimitPoint> out;
  double c = alpha / k;
  for (int d = 0; d < decades; ++d, c /= 10.0) {
    const auto rob = solve(BoundaryRegime::robin(c), rho0, {t_end}, dt);
    out.push_back({c, l1_distance(rob, 1, neu, 1)});
  }
  return out;
}

}  // namespace dssep
