#pragma once

// Acceptance criteria, shared by `dssep assert-suite` and the acceptance
// test binary. Each criterion returns one result line; the E group is
// reported and never asserted.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dssep/dynamics.hpp"
#include "dssep/fluct.hpp"
#include "dssep/harness/compare.hpp"
#include "dssep/harness/config.hpp"
#include "dssep/harness/run.hpp"
#include "dssep/harness/sweep.hpp"
#include "dssep/measures.hpp"
#include "dssep/observables.hpp"
#include "dssep/pde.hpp"
#include "dssep/test_function.hpp"

namespace dssep::harness {

struct CriterionResult {
  std::string id;
  std::string title;
  bool asserted = true;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;

  std::string line() const {
    std::ostringstream os;
    std::string d = detail;
    while (!d.empty() && (d.back() == ' ' || d.back() == ';')) d.pop_back();
    os << (asserted ? (passed ? "[PASS] " : "[FAIL] ") : "[INFO] ") << id << ' ' << title << ": " << d << " ("
       << std::fixed;
    os.precision(1);
    os << seconds << " s)";
    return os.str();
  }
};

struct SuiteOptions {
  double replica_scale = 1.0;  // below 1 only for smoke runs
  unsigned workers = 1;
  std::uint64_t seed = 20240611;
};

namespace detail {

inline std::string num(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

inline std::size_t scaled(const SuiteOptions& o, std::size_t replicas) {
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(static_cast<double>(replicas) * o.replica_scale)));
}

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double stderr_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

inline ExperimentConfig base_config(const SuiteOptions& o, std::string name) {
  ExperimentConfig c;
  c.name = std::move(name);
  c.workers = o.workers;
  c.seed = derive_seed(o.seed, {std::hash<std::string>{}(c.name)});
  return c;
}

}  // namespace detail

// Runs shared between criteria are kept here so C12 can reuse the C10 runs.
class AcceptanceSuite {
 public:
  explicit AcceptanceSuite(SuiteOptions o = {}) : opt_(o) {}

  // A1. Detailed balance of nu_p for the slow-site generator.
  CriterionResult a1() {
    return timed("A1", "reversibility of nu_p", [&](CriterionResult& r) {
      double worst = 0.0;
      int cases = 0;
      for (std::size_t n = 3; n <= 10; ++n) {
        const auto lattice = Lattice::torus(n);
        for (double g : {0.01, 0.5, 1.0, 2.0}) {
          const auto schedule = RateSchedule::slow_site_power(g, 0.0);
          const auto gen = exact_generator(lattice, schedule, static_cast<double>(n));
          for (double p : {0.2, 0.5, 0.8}) {
            worst = std::max(worst, verify_detailed_balance(ProductMeasure::invariant(lattice, p, g), gen));
            ++cases;
          }
        }
      }
      r.passed = worst <= 1e-12;
      r.detail = std::to_string(cases) + " generators, max violation " + detail::num(worst) + " <= 1e-12";
    });
  }

  // A2. The two forms of the generator action on random cases.
  CriterionResult a2() {
    return timed("A2", "generator action forms agree", [&](CriterionResult& r) {
      auto rng = make_rng(derive_seed(opt_.seed, {2}));
      std::vector<TestFunction> pool;
      for (auto cls : {FunctionClass::schwartz, FunctionClass::schwartz_neumann, FunctionClass::torus_c2,
                       FunctionClass::interval_c2, FunctionClass::robin_admissible})
        for (auto& h : catalog(cls)) pool.push_back(h);
      auto uni = [&](double a, double b) { return a + (b - a) * uniform01(rng); };
      auto pick = [&](int a, int b) { return a + static_cast<int>(uniform01(rng) * (b - a + 1)); };
      int failures = 0;
      double worst = 0.0;
      const int cases = 1000;
      for (int i = 0; i < cases; ++i) {
        const bool torus = uniform01(rng) < 0.5;
        const Lattice lattice = torus ? Lattice::torus(static_cast<std::size_t>(pick(3, 64)))
                                      : Lattice::line(static_cast<std::size_t>(pick(3, 32)));
        const double n = torus ? static_cast<double>(lattice.size()) : static_cast<double>(pick(4, 200));
        const int span = torus ? static_cast<int>(lattice.size()) - 2 : static_cast<int>(lattice.last_label()) - 1;
        RateSchedule schedule = RateSchedule::uniform();
        switch (pick(0, 3)) {
          case 0: break;
          case 1: schedule = RateSchedule::slow_site_perturbed(uni(-1.0, 2.0)); break;
          case 2: schedule = RateSchedule::slow_site_power(uni(0.1, 3.0), uni(0.0, 3.0)); break;
          default: schedule = RateSchedule::slow_bonds(pick(1, std::max(1, std::min(3, span))), uni(0.1, 3.0), uni(0.0, 3.0));
        }
        Configuration config(lattice.size());
        for (std::size_t s = 0; s < lattice.size(); ++s) config.set(s, uniform01(rng) < 0.5);
        const auto& h = pool[static_cast<std::size_t>(pick(0, static_cast<int>(pool.size()) - 1))];
        SiteRule rule = uniform01(rng) < 0.5 ? SiteRule::plain : SiteRule::interpolated;
        if (schedule.kind() == DefectKind::slow_bonds && uniform01(rng) < 0.5) rule = SiteRule::robin;
        const auto a = site_values(lattice, h, n, rule, schedule.kind() == DefectKind::slow_bonds ? schedule.k() : 1);
        const auto mode = uniform01(rng) < 0.5 ? ActionMode::hydrodynamic : ActionMode::fluctuation;
        try {
          const auto f = generator_action_forms(config, lattice, a, schedule, n, mode, uni(0.05, 0.95));
          double peak = 0.0;
          for (double v : a) peak = std::max(peak, std::abs(v));
          const double factor = mode == ActionMode::hydrodynamic ? n : n * std::sqrt(n);
          const double scale = std::max({std::abs(f.direct), std::abs(f.closed), factor * peak});
          if (scale > 0.0) worst = std::max(worst, std::abs(f.direct - f.closed) / scale);
        } catch (const ConsistencyError&) {
          ++failures;
        }
      }
      r.passed = failures == 0 && worst <= 1e-9;
      r.detail = std::to_string(cases) + " random cases, " + std::to_string(failures) +
                 " disagreements, max relative gap " + detail::num(worst) + " <= 1e-9";
    });
  }

  // A3. H(mu | nu_p) <= K0 n at n = 6.
  CriterionResult a3() {
    return timed("A3", "entropy bound H(mu|nu_p) <= K0 n", [&](CriterionResult& r) {
      const std::size_t n = 6;
      const auto lattice = Lattice::torus(n);
      auto rng = make_rng(derive_seed(opt_.seed, {3}));
      int held = 0;
      double worst_ratio = 0.0;
      for (int i = 0; i < 50; ++i) {
        const double p = 0.1 + 0.8 * uniform01(rng);
        const double g = std::exp(std::log(0.01) + uniform01(rng) * std::log(1000.0));
        const auto nu = ProductMeasure::invariant(lattice, p, g);
        std::vector<double> mu;
        if (i % 2 == 0) {
          std::vector<double> m(n);
          for (auto& v : m) v = 0.02 + 0.96 * uniform01(rng);
          mu = ProductMeasure::from_marginals(m).state_probabilities();
        } else {
          mu.resize(std::size_t{1} << n);
          double total = 0.0;
          for (auto& v : mu) total += (v = -std::log(uniform_open(rng)));
          for (auto& v : mu) v /= total;
        }
        const auto eb = relative_entropy(mu, nu, lattice);
        held += eb.holds() ? 1 : 0;
        worst_ratio = std::max(worst_ratio, eb.entropy / (eb.k0 * static_cast<double>(n)));
      }
      r.passed = held == 50;
      r.detail = std::to_string(held) + "/50 measures within the bound, max H/(K0 n) = " + detail::num(worst_ratio);
    });
  }

  // A4. Gillespie, graphical construction and the exact law at n = 5.
  CriterionResult a4() {
    return timed("A4", "engine equivalence", [&](CriterionResult& r) {
      const std::size_t n = 5;
      const double t = 0.1;
      const auto lattice = Lattice::torus(n);
      const auto schedule = RateSchedule::slow_site_power(1.0, 1.0);
      const auto measure = ProductMeasure::from_profile(lattice, InitialProfile::step(0.8, 0.2), 5.0);
      const auto exact = evolve_distribution(measure.state_probabilities(), exact_generator(lattice, schedule, 5.0),
                                             SimClock{5.0}.microscopic(t));
      const std::size_t replicas = detail::scaled(opt_, 1000000);
      std::vector<double> gil(exact.size(), 0.0), gra(exact.size(), 0.0);
      const SimClock clock{5.0};
      for (std::size_t k = 0; k < replicas; ++k) {
        const auto id = static_cast<std::uint64_t>(k);
        auto rng = make_rng(derive_seed(opt_.seed, {4, id}));
        const auto start = sample(measure, lattice, rng);
        GillespieEngine engine(lattice, schedule, 5.0, start, derive_seed(opt_.seed, {5, id}));
        engine.advance_to(t);
        gil[engine.configuration().state()] += 1.0;
        EventStream events(lattice, schedule, 5.0, derive_seed(opt_.seed, {6, id}));
        gra[graphical_step(start, events, clock.microscopic(t)).state()] += 1.0;
      }
      for (auto& v : gil) v /= static_cast<double>(replicas);
      for (auto& v : gra) v /= static_cast<double>(replicas);
      const double tv1 = detail::total_variation(gil, exact), tv2 = detail::total_variation(gra, exact);
      const double tv3 = detail::total_variation(gil, gra);
      r.passed = tv1 < 0.01 && tv2 < 0.01 && tv3 < 0.01;
      r.detail = std::to_string(replicas) + " replicas, TV(gillespie, exact) = " + detail::num(tv1) +
                 ", TV(graphical, exact) = " + detail::num(tv2) + ", TV(gillespie, graphical) = " + detail::num(tv3) +
                 " < 0.01";
    });
  }

  // B5. Periodic regime for g = 1 + 1/sqrt(n).
  CriterionResult b5() {
    return timed("B5", "periodic regime, g = 1+1/sqrt(n)", [&](CriterionResult& r) {
      auto c = detail::base_config(opt_, "B5");
      c.n = 1024;
      c.schedule_kind = "slow-site-perturbed";
      c.c = 1.0;
      c.profile = "cosine:0.5:0.25";
      c.times = {0.01, 0.05};
      c.replicas = detail::scaled(opt_, 64);
      const auto res = run(c);
      const auto rep = profile_errors(c, res.table, BoundaryRegime::periodic());
      r.passed = true;
      r.detail = std::to_string(c.replicas) + " replicas, window " + std::to_string(c.mollifier_window()) + ";";
      for (const auto& p : rep) {
        r.passed = r.passed && p.distance.l1 < 0.02;
        r.detail += " L1(t=" + detail::num(p.t) + ") = " + detail::num(p.distance.l1);
      }
      r.detail += " < 0.02";
    });
  }

  // B6. Neumann regime for beta = 2, and discrimination against periodic.
  CriterionResult b6() {
    return timed("B6", "Neumann regime, beta = 2", [&](CriterionResult& r) {
      auto c = detail::base_config(opt_, "B6");
      c.n = 1024;
      c.schedule_kind = "slow-site";
      c.alpha = 1.0;
      c.beta = 2.0;
      c.profile = "step:0.8:0.2";
      c.condition_origin = true;
      c.times = {0.05};
      c.replicas = detail::scaled(opt_, 64);
      const auto res = run(c);
      const double neu = profile_errors(c, res.table, BoundaryRegime::neumann())[0].distance.l1;
      const double per = profile_errors(c, res.table, BoundaryRegime::periodic())[0].distance.l1;
      r.passed = neu < 0.03 && per > 3.0 * neu;
      r.detail = "L1 vs Neumann = " + detail::num(neu) + " < 0.03, L1 vs periodic = " + detail::num(per) +
                 " (ratio " + detail::num(per / neu) + " > 3)";
    });
  }

  // B7. Law of large numbers for the time the origin is empty.
  CriterionResult b7() {
    return timed("B7", "LLN at the origin", [&](CriterionResult& r) {
      std::vector<double> means;
      r.passed = true;
      for (std::size_t n : {100, 400}) {
        auto c = detail::base_config(opt_, "B7-n" + std::to_string(n));
        c.n = n;
        c.geometry = Geometry::line;
        c.radius = 8;
        c.schedule_kind = "slow-site";
        c.alpha = 1.0;
        c.beta = 2.0;
        c.equilibrium = true;
        c.p = 0.5;
        c.times = {0.1};
        c.observables = {"occupation"};
        c.replicas = detail::scaled(opt_, 4000);
        const auto res = run(c);
        const auto v = res.table.values("occupation", 0.1);
        const double g = c.schedule().g(static_cast<double>(n));
        const double target = static_cast<double>(n) * (1.0 - c.p) / ((1.0 - c.p) + c.p / g);
        const double m = detail::mean_of(v);
        means.push_back(m);
        const bool ok = std::abs(m - target) <= 0.3 * target;
        r.passed = r.passed && ok;
        r.detail += "n=" + std::to_string(n) + ": mean " + detail::num(m) + " +- " + detail::num(detail::stderr_of(v)) +
                    " vs " + detail::num(target) + (ok ? " (within 30%); " : " (outside 30%); ");
      }
      const bool decreasing = means[1] < means[0];
      r.passed = r.passed && decreasing;
      r.detail += decreasing ? "decreasing in n" : "not decreasing in n";
    });
  }

  // B8. Robin regime for k = 3 slow bonds at beta = 1.
  CriterionResult b8() {
    return timed("B8", "Robin regime, k = 3 slow bonds", [&](CriterionResult& r) {
      auto c = detail::base_config(opt_, "B8");
      c.n = 1024;
      c.schedule_kind = "slow-bonds";
      c.k = 3;
      c.alpha = 2.0;
      c.beta = 1.0;
      c.profile = "step:0.8:0.2";
      c.times = {0.05};
      c.replicas = detail::scaled(opt_, 64);
      const auto res = run(c);
      const double rob = profile_errors(c, res.table, BoundaryRegime::robin(2.0 / 3.0))[0].distance.l1;
      const double neu = profile_errors(c, res.table, BoundaryRegime::neumann())[0].distance.l1;
      const double per = profile_errors(c, res.table, BoundaryRegime::periodic())[0].distance.l1;
      r.passed = rob < 0.03 && rob < neu && rob < per;
      r.detail = "L1 vs Robin(2/3) = " + detail::num(rob) + " < 0.03; vs Neumann = " + detail::num(neu) +
                 ", vs periodic = " + detail::num(per);
    });
  }

  // C9. Var Y_0(H) = chi(p) int H^2 under nu_p.
  CriterionResult c9() {
    return timed("C9", "static covariance of the fluctuation field", [&](CriterionResult& r) {
      const double n = 2048.0, p = 0.5;
      const auto schedule = RateSchedule::slow_site_perturbed(1.0);
      const auto all = catalog(FunctionClass::schwartz);
      std::vector<TestFunction> hs;
      for (const auto& h : all)
        if (h.id() == "exp(-u^2)" || h.id() == "gauss-0.05" || h.id() == "u*exp(-u^2)") hs.push_back(h);
      const std::size_t samples = detail::scaled(opt_, 10000);
      r.passed = true;
      for (const auto& h : hs) {
        const auto lattice = Lattice::line(static_cast<std::size_t>(std::ceil(h.radius() * n)) + 1);
        const auto nu = ProductMeasure::invariant(lattice, p, schedule, n);
        const FluctuationField field(lattice, h, nu, n);
        auto rng = make_rng(derive_seed(opt_.seed, {9, std::hash<std::string>{}(h.id())}));
        std::vector<double> y(samples);
        for (auto& v : y) v = field(sample(nu, lattice, rng));
        const double m = detail::mean_of(y);
        double ss = 0.0;
        for (double v : y) ss += (v - m) * (v - m);
        const double var = ss / static_cast<double>(samples - 1);
        const double target = p * (1.0 - p) * squared_norm(h);
        const double rel = std::abs(var / target - 1.0);
        r.passed = r.passed && rel < 0.05;
        r.detail += h.id() + ": " + detail::num(var) + " vs " + detail::num(target) + " (" + detail::num(100 * rel, 2) +
                    "%); ";
      }
      r.detail += std::to_string(samples) + " samples, tolerance 5%";
    });
  }

  // C10. Replica-mean quadratic variation against 2 chi T |grad H|^2.
  CriterionResult c10() {
    return timed("C10", "quadratic variation limit", [&](CriterionResult& r) {
      r.passed = true;
      for (const auto* run_ : {&c10_run(false), &c10_run(true)}) {
        const auto& q = *run_;
        const double rel = std::abs(q.qv_mean / q.qv_limit - 1.0);
        const bool ok = rel < q.tolerance;
        r.passed = r.passed && ok;
        r.detail += q.label + ": QV " + detail::num(q.qv_mean) + " +- " + detail::num(q.qv_se) + " vs " +
                    detail::num(q.qv_limit) + " (" + detail::num(100 * rel, 2) + "% < " +
                    detail::num(100 * q.tolerance, 2) + "%), E[I^2] = " + detail::num(q.integral_sq) +
                    " <= 80 t chi |H'|^2 = " + detail::num(q.bound) + (q.integral_sq <= q.bound ? "" : " (exceeded)") +
                    "; ";
      }
    });
  }

  // C11. Second moment of the Kipnis-Varadhan functional against n.
  CriterionResult c11() {
    return timed("C11", "Kipnis-Varadhan scaling", [&](CriterionResult& r) {
      std::vector<double> xs, ys;
      const double t = 0.1;
      for (std::size_t n : {128, 256, 512, 1024}) {
        auto c = detail::base_config(opt_, "C11-n" + std::to_string(n));
        c.n = n;
        c.geometry = Geometry::line;
        c.radius = 4;
        c.schedule_kind = "slow-site";
        c.alpha = 4.0;
        c.beta = 2.0;
        c.equilibrium = true;
        c.p = 0.5;
        c.times = {t};
        c.observables = {"kv"};
        c.replicas = detail::scaled(opt_, 2500);
        const auto v = run(c).table.values("kv", t);
        double m2 = 0.0;
        for (double x : v) m2 += x * x;
        m2 /= static_cast<double>(v.size());
        xs.push_back(std::log(static_cast<double>(n)));
        ys.push_back(std::log(m2));
        r.detail += "n=" + std::to_string(n) + ": " + detail::num(m2) + "; ";
      }
      const double mx = detail::mean_of(xs), my = detail::mean_of(ys);
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
      }
      const double slope = sxy / sxx;
      r.passed = slope <= -0.7;
      r.detail += "log-log slope " + detail::num(slope) + " <= -0.7 (bound n^{1-beta} = n^-1)";
    });
  }

  // C12. Martingales are centred.
  CriterionResult c12() {
    return timed("C12", "martingale mean", [&](CriterionResult& r) {
      r.passed = true;
      for (const auto* run_ : {&c10_run(false), &c10_run(true)}) {
        const auto& q = *run_;
        const bool ok = std::abs(q.m_mean) < 3.0 * q.m_se;
        r.passed = r.passed && ok;
        r.detail += q.label + ": mean M_T " + detail::num(q.m_mean) + ", 3 SE = " + detail::num(3.0 * q.m_se) + "; ";
      }
    });
  }

  // D13. Eigenfunction regression and convergence order.
  CriterionResult d13() {
    return timed("D13", "PDE eigenfunction regression", [&](CriterionResult& r) {
      const double t = 0.05;
      r.passed = true;
      for (int which = 0; which < 2; ++which) {
        const auto regime = which == 0 ? BoundaryRegime::periodic() : BoundaryRegime::neumann();
        auto exact = [&](double tt, double u) {
          return which == 0 ? periodic_cosine_exact(tt, u) : neumann_cosine_exact(tt, u);
        };
        double err[2];
        int idx = 0;
        for (std::size_t m : {128, 512}) {
          const double h = 1.0 / static_cast<double>(m);
          const auto sol = solve(regime, cell_values([&](double u) { return exact(0.0, u); }, m), {t}, h * h / 2.0);
          err[idx++] = max_error(sol, 1, [&](double u) { return exact(t, u); });
        }
        const double order = std::log(err[0] / err[1]) / std::log(4.0);
        r.passed = r.passed && err[1] < 1e-4 && order >= 1.9;
        r.detail += std::string(to_string(regime.regime)) + ": max error " + detail::num(err[1]) + " at m=512, order " +
                    detail::num(order, 3) + "; ";
      }
      r.detail += "tolerance 1e-4, order >= 1.9";
    });
  }

  // D14. Robin limits c -> 0 and c -> infinity.
  CriterionResult d14() {
    return timed("D14", "Robin limits", [&](CriterionResult& r) {
      const std::size_t m = 512;
      const double h = 1.0 / static_cast<double>(m), dt = h * h / 2.0, t = 0.05;
      const auto step = cell_values(InitialProfile::step(0.8, 0.2), m);
      const auto smooth = cell_values(InitialProfile::cosine(0.5, 0.25), m);
      const double to_neu = l1_distance(solve(BoundaryRegime::robin(1e-3), step, {t}, dt), 1,
                                        solve(BoundaryRegime::neumann(), step, {t}, dt), 1);
      const double to_per = l1_distance(solve(BoundaryRegime::robin(1e3), smooth, {t}, dt), 1,
                                        solve(BoundaryRegime::periodic(), smooth, {t}, dt), 1);
      const auto limit = robin_to_neumann_limit(2.0, 3, t, step, dt, 5);
      bool monotone = true;
      for (std::size_t i = 1; i < limit.size(); ++i) monotone = monotone && limit[i].distance < limit[i - 1].distance;
      r.passed = to_neu < 1e-2 && to_per < 1e-2 && monotone;
      r.detail = "L1(Robin 1e-3, Neumann) = " + detail::num(to_neu) + ", L1(Robin 1e3, periodic) = " +
                 detail::num(to_per) + " < 1e-2; distance to Neumann from c = 2/3 down to 6.7e-5 " +
                 (monotone ? "decreases monotonically" : "is not monotone");
    });
  }

  // E. Fitted interface coupling over beta (reported only).
  CriterionResult e() {
    return timed("E", "interface coupling sweep (reported)", [&](CriterionResult& r) {
      r.asserted = false;
      auto c = detail::base_config(opt_, "E");
      c.alpha = 1.0;
      c.profile = "step:0.8:0.2";
      c.times = {0.05};
      c.replicas = detail::scaled(opt_, 8);
      const auto fits = sweep(c, {0.0, 0.25, 0.5, 0.75, 1.0, 1.5}, {512, 1024});
      for (const auto& f : fits)
        r.detail += "beta=" + detail::num(f.beta) + " n=" + std::to_string(f.n) + ": c=" + detail::num(f.fitted_c, 3) +
                    " (L1 " + detail::num(f.l1_fitted, 3) + ", periodic " + detail::num(f.l1_periodic, 3) +
                    ", Neumann " + detail::num(f.l1_neumann, 3) + "); ";
      r.detail += "conjecture: periodic for beta < 1, c = alpha/2 = 0.5 at beta = 1";
      sweep_ = fits;
    });
  }

  std::vector<CriterionResult> run_all(const std::function<void(const CriterionResult&)>& report = {}) {
    std::vector<CriterionResult> out;
    for (auto f : {&AcceptanceSuite::a1, &AcceptanceSuite::a2, &AcceptanceSuite::a3, &AcceptanceSuite::a4,
                   &AcceptanceSuite::b5, &AcceptanceSuite::b6, &AcceptanceSuite::b7, &AcceptanceSuite::b8,
                   &AcceptanceSuite::c9, &AcceptanceSuite::c10, &AcceptanceSuite::c11, &AcceptanceSuite::c12,
                   &AcceptanceSuite::d13, &AcceptanceSuite::d14, &AcceptanceSuite::e}) {
      out.push_back((this->*f)());
      if (report) report(out.back());
    }
    return out;
  }

  // Runs one criterion by id (A1 ... E).
  CriterionResult run_one(const std::string& id) {
    static const std::map<std::string, CriterionResult (AcceptanceSuite::*)()> table = {
        {"A1", &AcceptanceSuite::a1},   {"A2", &AcceptanceSuite::a2},   {"A3", &AcceptanceSuite::a3},
        {"A4", &AcceptanceSuite::a4},   {"B5", &AcceptanceSuite::b5},   {"B6", &AcceptanceSuite::b6},
        {"B7", &AcceptanceSuite::b7},   {"B8", &AcceptanceSuite::b8},   {"C9", &AcceptanceSuite::c9},
        {"C10", &AcceptanceSuite::c10}, {"C11", &AcceptanceSuite::c11}, {"C12", &AcceptanceSuite::c12},
        {"D13", &AcceptanceSuite::d13}, {"D14", &AcceptanceSuite::d14}, {"E", &AcceptanceSuite::e}};
    auto it = table.find(id);
    if (it == table.end()) throw ConfigError("unknown criterion '" + id + "'");
    return (this->*(it->second))();
  }

  const std::vector<CouplingFit>& sweep_fits() const { return sweep_; }

 private:
  struct QvRun {
    std::string label;
    double qv_mean = 0.0, qv_se = 0.0, qv_limit = 0.0, tolerance = 0.0;
    double m_mean = 0.0, m_se = 0.0;
    double integral_sq = 0.0, bound = 0.0;
  };

  // Equilibrium runs on a line long enough to hold the support of H. The
  // expected quadratic variation only uses stationarity, which the
  // reflecting line preserves exactly.
  const QvRun& c10_run(bool neumann) {
    auto& slot = neumann ? qv_neumann_ : qv_line_;
    if (slot) return *slot;
    const double T = 0.5, p = 0.5;
    const std::size_t n = 1024;
    auto c = detail::base_config(opt_, neumann ? "C10-neumann" : "C10-line");
    c.n = n;
    c.geometry = Geometry::line;
    c.equilibrium = true;
    c.p = p;
    c.times = {T};
    c.observables = {"martingale"};
    c.mode = ActionMode::fluctuation;
    c.replicas = detail::scaled(opt_, 6);
    const TestFunction h = neumann ? neumann_bump(0.6, 0.03, 1.0, 0.03) : gaussian(0.03);
    if (neumann) {
      c.schedule_kind = "slow-site";
      c.alpha = 1.0;
      c.beta = 2.0;
    } else {
      c.schedule_kind = "slow-site-perturbed";
      c.c = 1.0;
    }
    c.radius = static_cast<std::size_t>(std::ceil(h.radius() * static_cast<double>(n))) + 16;

    // run() takes catalog ids; this narrow H is attached directly.
    const Lattice lattice = c.lattice();
    const RateSchedule schedule = c.schedule();
    const auto measure = initial_measure(c, lattice, schedule);
    const auto a = site_values(lattice, h, static_cast<double>(n));
    std::vector<double> qv, mart, integ;
    for (std::size_t rep = 0; rep < c.replicas; ++rep) {
      const auto res = detail::run_replica(c, lattice, schedule, measure, {h}, {a}, rep);
      for (const auto& rec : res.records) {
        if (rec.observable == "qv") qv.push_back(rec.value);
        if (rec.observable == "martingale") mart.push_back(rec.value);
        if (rec.observable == "integral") integ.push_back(rec.value);
      }
    }
    QvRun q;
    q.label = neumann ? "beta=2, " + h.id() : "g=1+1/sqrt(n), " + h.id();
    q.qv_mean = detail::mean_of(qv);
    q.qv_se = detail::stderr_of(qv);
    q.qv_limit = limit_quadratic_variation(neumann ? LineRegime::line_neumann : LineRegime::line, h, p, T);
    q.tolerance = neumann ? 0.15 : 0.10;
    q.m_mean = detail::mean_of(mart);
    q.m_se = detail::stderr_of(mart);
    for (double v : integ) q.integral_sq += v * v / static_cast<double>(integ.size());
    q.bound = 80.0 * T * p * (1.0 - p) * squared_norm(h, 1);
    slot = q;
    return *slot;
  }

  template <class F>
  CriterionResult timed(std::string id, std::string title, F&& body) {
    CriterionResult r;
    r.id = std::move(id);
    r.title = std::move(title);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail += std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }

  SuiteOptions opt_;
  std::optional<QvRun> qv_line_, qv_neumann_;
  std::vector<CouplingFit> sweep_;
};

}  // namespace dssep::harness
