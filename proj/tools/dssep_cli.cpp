// dssep: command line driver.
//
//   dssep simulate --config exp.cfg [--n 1024 --replicas 64 ...] [--assert]
//   dssep pde --regime robin --c 0.5 --profile step --t-end 0.05
//   dssep oracle --n 6 --p 0.5 --alpha 0.5
//   dssep fluct --testfn neumann:two-sided --p 0.5 --t-end 1
//   dssep sweep --config base.cfg --betas 0,0.5,1,1.5 --sizes 512,1024
//   dssep assert-suite [--only A1,D13]
//
// Exit status: 0 success, 1 usage or config error, 2 assertion failure,
// 3 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dssep/fluct.hpp"
#include "dssep/harness/acceptance.hpp"
#include "dssep/harness/config.hpp"
#include "dssep/harness/results.hpp"
#include "dssep/harness/run.hpp"
#include "dssep/harness/sweep.hpp"
#include "dssep/measures.hpp"
#include "dssep/pde.hpp"

namespace fs = std::filesystem;
using namespace dssep;
using namespace dssep::harness;

namespace {

constexpr int exit_ok = 0, exit_usage = 1, exit_assert = 2, exit_runtime = 3;

struct AssertionFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by the experiment verbs; each maps onto a config key.
struct Overrides {
  std::string config;
  std::map<std::string, std::string> values;
  bool assert_ = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "experiment config file")->check(CLI::ExistingFile);
    flag(app, "--n", "lattice.n", "scaling parameter n");
    flag(app, "--alpha", "schedule.alpha", "defect amplitude");
    flag(app, "--beta", "schedule.beta", "defect exponent");
    flag(app, "--p", "initial.p", "equilibrium density");
    flag(app, "--profile", "initial.profile", "initial profile id");
    flag(app, "--t-end", "time.t_end", "final macroscopic time");
    flag(app, "--samples", "time.samples", "number of sample times");
    flag(app, "--replicas", "run.replicas", "replica count");
    flag(app, "--seed", "run.seed", "master seed");
    flag(app, "--workers", "run.workers", "worker threads (default $DEFECT_SSEP_WORKERS or 1)");
    flag(app, "--out", "output.dir", "output directory");
    app->add_flag("--assert", assert_, "exit with status 2 when an acceptance threshold fails");
  }

  void flag(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(name, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  KeyValues merged() const {
    KeyValues kv = config.empty() ? KeyValues{} : read_config(config);
    for (const auto& [k, v] : values) kv[k] = v;
    return kv;
  }
};

void write_outputs(const std::string& dir, const ResultTable& table) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  std::ofstream res(fs::path(dir) / "results.csv");
  table.write_csv(res);
  std::ofstream sum(fs::path(dir) / "summary.csv");
  write_summary_csv(sum, table.summarize());
  if (!res || !sum) throw std::runtime_error("failed writing outputs to " + dir);
}

int cmd_simulate(const Overrides& o) {
  const auto cfg = make_config(o.merged());
  const auto out = run(cfg);
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
  write_outputs(cfg.out_dir, out.table);
  for (const auto& s : out.table.summarize()) {
    if (s.observable == "density") continue;
    std::cout << s.observable << (s.testfn.empty() ? "" : "[" + s.testfn + "]") << " t=" << s.t << ": " << s.mean
              << " +- " << s.stderr_ << " (" << s.count << ")\n";
  }
  if (cfg.wants("density") && !cfg.equilibrium) {
    const auto regime = cfg.boundary();
    const auto rep = profile_errors(cfg, out.table, regime);
    for (const auto& r : rep) {
      std::cout << "profile vs " << to_string(regime.regime) << " t=" << r.t << ": L1 " << r.distance.l1 << ", Linf "
                << r.distance.linf << " (window " << r.distance.window << " sites)\n";
      if (o.assert_ && cfg.l1_max && r.distance.l1 > *cfg.l1_max)
        throw AssertionFailed("L1 error " + std::to_string(r.distance.l1) + " exceeds " + std::to_string(*cfg.l1_max));
    }
  }
  return exit_ok;
}

struct PdeArgs {
  std::string regime = "periodic", profile = "cosine", out;
  double c = 1.0, t_end = 0.05, dt = 0.0;
  int samples = 1;
  std::size_t m = 512;
};

int cmd_pde(const PdeArgs& a) {
  BoundaryRegime b = a.regime == "periodic" ? BoundaryRegime::periodic()
                     : a.regime == "neumann" ? BoundaryRegime::neumann()
                                             : BoundaryRegime::robin(a.c);
  std::vector<double> times;
  for (int j = 1; j <= a.samples; ++j) times.push_back(a.t_end * j / a.samples);
  const double h = 1.0 / static_cast<double>(a.m);
  const auto sol = solve(b, cell_values(InitialProfile::from_id(a.profile), a.m), times, a.dt > 0 ? a.dt : h * h / 2);
  ResultTable table;
  for (std::size_t j = 0; j < sol.times.size(); ++j) {
    for (std::size_t i = 0; i < sol.m; ++i)
      table.add({"pde", 0, sol.times[j], "rho", format_double(sol.center(i)), sol.rho[j][i]});
    table.add({"pde", 0, sol.times[j], "rho(0+)", "", sol.plus[j]});
    table.add({"pde", 0, sol.times[j], "rho(0-)", "", sol.minus[j]});
    std::cout << "t=" << sol.times[j] << " mass " << sol.mass(j) << " rho(0+) " << sol.plus[j] << " rho(0-) "
              << sol.minus[j] << '\n';
  }
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::ofstream f(fs::path(a.out) / "pde.csv");
    table.write_csv(f);
  }
  return exit_ok;
}

struct OracleArgs {
  std::size_t n = 6;
  double p = 0.5, alpha = 0.5, beta = 0.0, t_end = 0.1;
};

int cmd_oracle(const OracleArgs& a) {
  const auto lattice = Lattice::torus(a.n);
  const auto schedule = RateSchedule::slow_site_power(a.alpha, a.beta);
  const double n = static_cast<double>(a.n);
  const double g = schedule.g(n);
  const auto gen = exact_generator(lattice, schedule, n);
  const auto nu = ProductMeasure::invariant(lattice, a.p, g);
  std::cout << "states " << gen.states() << ", g(n) = " << g << '\n';
  std::cout << "detailed balance violation " << verify_detailed_balance(nu, gen) << '\n';
  std::cout << "stationarity residual " << stationarity_residual(nu, gen) << '\n';
  std::cout << "K0 = " << entropy_constant(a.n, a.p, nu.marginal(lattice.origin())) << '\n';
  const auto mu0 = ProductMeasure::from_profile(lattice, InitialProfile::step(0.8, 0.2), n).state_probabilities();
  const auto mu = evolve_distribution(mu0, gen, SimClock{n}.microscopic(a.t_end));
  double occ = 0.0;
  for (std::size_t s = 0; s < mu.size(); ++s)
    if (Configuration::from_state(a.n, s)[lattice.origin()]) occ += mu[s];
  std::cout << "P(eta_t(0) = 1) from the step profile at t = " << a.t_end << ": " << occ
            << " (stationary " << nu.marginal(lattice.origin()) << ")\n";
  return exit_ok;
}

struct FluctArgs {
  std::string testfn = "schwartz:exp(-u^2)";
  double p = 0.5, t_end = 1.0, s = 0.0;
};

int cmd_fluct(const FluctArgs& a) {
  const auto h = find_test_function(a.testfn);
  const auto regime = h.function_class() == FunctionClass::schwartz_neumann ? LineRegime::line_neumann
                                                                             : LineRegime::line;
  std::cout << "regime " << to_string(regime) << ", H = " << h.id() << '\n';
  std::cout << "limit quadratic variation 2 t chi |grad H|^2 = " << limit_quadratic_variation(regime, h, a.p, a.t_end)
            << '\n';
  const auto st = ou_conditional_stats(regime, h, a.s, a.t_end);
  std::cout << "conditional variance int_0^{t-s} |grad T_r H|^2 dr = " << st.variance << " (identity "
            << st.variance_identity << ")\n";
  std::cout << "T_{t-s}H(0+) = " << st.mean_operator.zero_plus() << ", T_{t-s}H(0-) = " << st.mean_operator.zero_minus()
            << '\n';
  return exit_ok;
}

int cmd_sweep(const Overrides& o, const std::string& betas, const std::string& sizes) {
  auto kv = o.merged();
  if (!kv.count("schedule.kind")) kv["schedule.kind"] = "slow-site";
  if (!kv.count("initial.profile")) kv["initial.profile"] = "step:0.8:0.2";
  const auto cfg = make_config(kv);
  std::vector<double> bs;
  for (const auto& s : split_list(betas)) bs.push_back(std::stod(s));
  std::vector<std::size_t> ns;
  for (const auto& s : split_list(sizes)) ns.push_back(static_cast<std::size_t>(std::stoul(s)));
  const auto fits = sweep(cfg, bs, ns);
  ResultTable table;
  for (const auto& f : fits) {
    const std::string id = "beta=" + format_double(f.beta) + ";n=" + std::to_string(f.n);
    table.add({cfg.name, -1, f.t, "fitted_c", id, f.fitted_c});
    table.add({cfg.name, -1, f.t, "l1_fitted", id, f.l1_fitted});
    table.add({cfg.name, -1, f.t, "l1_periodic", id, f.l1_periodic});
    table.add({cfg.name, -1, f.t, "l1_neumann", id, f.l1_neumann});
    std::cout << id << ": fitted c " << f.fitted_c << " (L1 " << f.l1_fitted << "), periodic L1 " << f.l1_periodic
              << ", Neumann L1 " << f.l1_neumann << '\n';
  }
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    std::ofstream f(fs::path(cfg.out_dir) / "sweep.csv");
    table.write_csv(f);
  }
  return exit_ok;
}

int cmd_assert_suite(const std::string& only, double scale, unsigned workers) {
  SuiteOptions opt;
  opt.replica_scale = scale;
  opt.workers = workers;
  AcceptanceSuite suite(opt);
  std::vector<CriterionResult> results;
  auto print = [](const CriterionResult& r) { std::cout << r.line() << std::endl; };
  if (only.empty()) {
    results = suite.run_all(print);
  } else {
    for (const auto& id : split_list(only)) {
      results.push_back(suite.run_one(id));
      print(results.back());
    }
  }
  for (const auto& r : results)
    if (r.asserted && !r.passed) throw AssertionFailed("criterion " + r.id + " failed");
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exclusion process with a slow site or slow bonds: simulation and verification"};
  app.require_subcommand(1);

  Overrides sim;
  auto* simulate = app.add_subcommand("simulate", "run replicas of an experiment");
  sim.attach(simulate);

  PdeArgs pa;
  auto* pde = app.add_subcommand("pde", "solve the heat equation with the interface condition");
  pde->add_option("--regime", pa.regime)->check(CLI::IsMember({"periodic", "neumann", "robin"}));
  pde->add_option("--c", pa.c, "Robin coefficient");
  pde->add_option("--profile", pa.profile, "initial profile id");
  pde->add_option("--t-end", pa.t_end);
  pde->add_option("--samples", pa.samples)->check(CLI::PositiveNumber);
  pde->add_option("--m", pa.m, "cells")->check(CLI::Range(4, 1 << 20));
  pde->add_option("--dt", pa.dt, "time step (default h^2/2)");
  pde->add_option("--out", pa.out);

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "exact small-n checks");
  oracle->add_option("--n", oa.n)->check(CLI::Range(3, 12));
  oracle->add_option("--p", oa.p);
  oracle->add_option("--alpha", oa.alpha);
  oracle->add_option("--beta", oa.beta);
  oracle->add_option("--t-end", oa.t_end);

  FluctArgs fa;
  auto* fluct = app.add_subcommand("fluct", "Ornstein-Uhlenbeck reference quantities");
  fluct->add_option("--testfn", fa.testfn, "class:id from the catalog");
  fluct->add_option("--p", fa.p);
  fluct->add_option("--s", fa.s);
  fluct->add_option("--t-end", fa.t_end);

  Overrides sw;
  std::string betas = "0,0.25,0.5,0.75,1,1.5", sizes = "512,1024";
  auto* sweep_cmd = app.add_subcommand("sweep", "fit the interface coupling over beta");
  sw.attach(sweep_cmd);
  sweep_cmd->add_option("--betas", betas);
  sweep_cmd->add_option("--sizes", sizes);

  std::string only;
  double scale = 1.0;
  unsigned suite_workers = 1;
  auto* suite = app.add_subcommand("assert-suite", "run the acceptance criteria");
  suite->add_option("--only", only, "comma-separated criterion ids");
  suite->add_option("--scale", scale, "replica scale factor (smoke runs only)")->check(CLI::Range(0.0, 1.0));
  suite->add_option("--workers", suite_workers)->check(CLI::PositiveNumber);

  try {
    suite_workers = default_workers();
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_usage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*pde) return cmd_pde(pa);
    if (*oracle) return cmd_oracle(oa);
    if (*fluct) return cmd_fluct(fa);
    if (*sweep_cmd) return cmd_sweep(sw, betas, sizes);
    if (*suite) return cmd_assert_suite(only, scale, suite_workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_usage;
  } catch (const AssertionFailed& e) {
    std::cerr << "assertion failed: " << e.what() << '\n';
    return exit_assert;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_usage;
}
