#pragma once

// Interface-coupling fits over a grid of defect exponents. For each run the
// empirical profile is compared with Robin solutions over a range of
// coefficients; the best coefficient, and the errors against the periodic
// and Neumann solutions, are reported. Nothing here is asserted.

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "dssep/harness/compare.hpp"
#include "dssep/harness/config.hpp"
#include "dssep/harness/run.hpp"

namespace dssep::harness {

struct CouplingFit {
  double beta = 0.0;
  std::size_t n = 0;
  double t = 0.0;
  double fitted_c = 0.0;
  double l1_fitted = 0.0;
  double l1_periodic = 0.0;
  double l1_neumann = 0.0;
};

// Coefficient in [c_lo, c_hi] minimising the L1 error at time t.
inline CouplingFit fit_coupling(const ExperimentConfig& cfg, const std::vector<double>& density, double t,
                                double c_lo = 1e-3, double c_hi = 1e3) {
  const auto schedule = cfg.schedule();
  const auto w = cfg.mollifier_window();
  auto error = [&](const BoundaryRegime& b) {
    ExperimentConfig one = cfg;
    one.times = {t};
    return compare_profiles(density, schedule, reference_solution(one, b), t, w).l1;
  };
  CouplingFit f;
  f.beta = cfg.beta;
  f.n = cfg.n;
  f.t = t;
  f.l1_periodic = error(BoundaryRegime::periodic());
  f.l1_neumann = error(BoundaryRegime::neumann());
  auto objective = [&](double logc) { return error(BoundaryRegime::robin(std::exp(logc))); };
  const auto best = boost::math::tools::brent_find_minima(objective, std::log(c_lo), std::log(c_hi), 20);
  f.fitted_c = std::exp(best.first);
  f.l1_fitted = best.second;
  return f;
}

// Runs `base` once per (beta, n) with a slow-site schedule and fits the
// coupling at the final time.
inline std::vector<CouplingFit> sweep(const ExperimentConfig& base, const std::vector<double>& betas,
                                      const std::vector<std::size_t>& sizes) {
  std::vector<CouplingFit> out;
  for (double beta : betas) {
    for (std::size_t n : sizes) {
      ExperimentConfig cfg = base;
      cfg.beta = beta;
      cfg.n = n;
      cfg.schedule_kind = "slow-site";
      cfg.observables = {"density"};
      cfg.name = base.name + "-beta" + format_double(beta) + "-n" + std::to_string(n);
      const auto res = run(cfg);
      out.push_back(fit_coupling(cfg, mean_density(res.table, n, cfg.t_end()), cfg.t_end()));
    }
  }
  return out;
}

}  // namespace dssep::harness
