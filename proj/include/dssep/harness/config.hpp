#pragma once

// Experiment configuration: flat `dotted.key = value` files (one experiment
// per file, `#` comments), command-line overrides, and validation of every
// field before anything runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/program_options.hpp>

#include "dssep/error.hpp"
#include "dssep/measures.hpp"
#include "dssep/model.hpp"
#include "dssep/observables.hpp"
#include "dssep/pde.hpp"
#include "dssep/test_function.hpp"

namespace dssep::harness {

struct KeySpec {
  const char* key;
  const char* help;
};

// Every recognised key. Unknown keys are rejected.
inline const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      {"experiment.name", "identifier written to the experiment column"},
      {"lattice.n", "scaling parameter n (torus size for the torus geometry)"},
      {"lattice.geometry", "torus | line"},
      {"lattice.radius", "line geometry: labels -R..R (default n/2)"},
      {"schedule.kind", "uniform | slow-site-perturbed | slow-site | slow-bonds"},
      {"schedule.alpha", "defect amplitude alpha"},
      {"schedule.beta", "defect exponent beta"},
      {"schedule.c", "slow-site-perturbed: g(n) = 1 + c/sqrt(n)"},
      {"schedule.k", "number of slow bonds"},
      {"initial.kind", "profile | equilibrium"},
      {"initial.profile", "profile id, e.g. cosine, step:0.8:0.2, constant:0.5"},
      {"initial.p", "equilibrium density"},
      {"initial.condition_origin", "condition on eta(0) = 1 (true | false)"},
      {"time.t_end", "final macroscopic time"},
      {"time.samples", "number of equally spaced sample times in (0, t_end]"},
      {"time.list", "explicit comma-separated sample times (overrides samples)"},
      {"run.replicas", "number of replicas"},
      {"run.seed", "master seed"},
      {"run.workers", "worker threads"},
      {"run.engine", "gillespie | graphical"},
      {"observables.list", "comma-separated: density, pairing, field, martingale, occupation, kv"},
      {"observables.testfn", "comma-separated class:id, e.g. schwartz:exp(-u^2)"},
      {"observables.mode", "hydrodynamic | fluctuation"},
      {"observables.site_rule", "auto | plain | interpolated | robin"},
      {"observables.window", "mollifier window in sites (default ceil(n/64))"},
      {"pde.m", "PDE cells"},
      {"pde.dt", "PDE time step (default h^2/2)"},
      {"pde.regime", "auto | periodic | neumann | robin"},
      {"pde.robin_c", "Robin coefficient (default alpha/k)"},
      {"assert.l1_max", "largest accepted L1 profile error under --assert"},
      {"output.dir", "directory for results.csv and summary.csv"},
  };
  return keys;
}

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_config(std::istream& in, const std::string& source = "<config>") {
  namespace po = boost::program_options;
  po::options_description desc;
  for (const auto& k : config_keys()) desc.add_options()(k.key, po::value<std::string>(), k.help);
  po::variables_map vm;
  try {
    po::store(po::parse_config_file(in, desc, false), vm);
  } catch (const po::error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  KeyValues out;
  for (const auto& [key, value] : vm) out[key] = value.as<std::string>();
  return out;
}

inline KeyValues read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

// Looks up "class:id" in the catalog of that class.
inline TestFunction find_test_function(const std::string& spec, double robin_c = 1.0) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("observables.testfn: expected class:id, got '" + spec + "'");
  const std::string cls = spec.substr(0, colon), id = spec.substr(colon + 1);
  FunctionClass fc;
  if (cls == "schwartz") fc = FunctionClass::schwartz;
  else if (cls == "neumann") fc = FunctionClass::schwartz_neumann;
  else if (cls == "torus") fc = FunctionClass::torus_c2;
  else if (cls == "interval") fc = FunctionClass::interval_c2;
  else if (cls == "robin") fc = FunctionClass::robin_admissible;
  else throw ConfigError("observables.testfn: unknown class '" + cls + "'");
  for (auto& h : catalog(fc, robin_c))
    if (h.id() == id) return h;
  throw ConfigError("observables.testfn: no '" + id + "' in the " + cls + " catalog");
}

enum class Engine { gillespie, graphical };

struct ExperimentConfig {
  std::string name = "experiment";
  std::size_t n = 256;
  Geometry geometry = Geometry::torus;
  std::size_t radius = 0;

  std::string schedule_kind = "uniform";
  double alpha = 1.0;
  double beta = 0.0;
  double c = 1.0;
  int k = 1;

  bool equilibrium = false;
  std::string profile = "cosine";
  double p = 0.5;
  bool condition_origin = false;

  std::vector<double> times{0.05};
  std::size_t replicas = 1;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  Engine engine = Engine::gillespie;

  std::vector<std::string> observables{"density"};
  std::vector<std::string> testfns;
  ActionMode mode = ActionMode::hydrodynamic;
  std::string site_rule = "auto";
  std::size_t window = 0;

  std::size_t pde_m = 512;
  double pde_dt = 0.0;
  std::string pde_regime = "auto";
  double robin_c = -1.0;

  std::optional<double> l1_max;
  std::string out_dir;

  double t_end() const { return times.back(); }
  bool wants(const std::string& obs) const {
    return std::find(observables.begin(), observables.end(), obs) != observables.end();
  }

  Lattice lattice() const {
    return geometry == Geometry::torus ? Lattice::torus(n) : Lattice::line(radius);
  }

  RateSchedule schedule() const {
    if (schedule_kind == "uniform") return RateSchedule::uniform();
    if (schedule_kind == "slow-site-perturbed") return RateSchedule::slow_site_perturbed(c);
    if (schedule_kind == "slow-site") return RateSchedule::slow_site_power(alpha, beta);
    return RateSchedule::slow_bonds(k, alpha, beta);
  }

  std::vector<TestFunction> test_functions() const {
    std::vector<TestFunction> out;
    for (const auto& s : testfns) out.push_back(find_test_function(s, robin_coefficient()));
    return out;
  }

  // Boundary regime the hydrodynamic limit predicts for this schedule.
  BoundaryRegime boundary() const {
    if (pde_regime == "periodic") return BoundaryRegime::periodic();
    if (pde_regime == "neumann") return BoundaryRegime::neumann();
    if (pde_regime == "robin") return BoundaryRegime::robin(robin_coefficient());
    if (schedule_kind == "uniform" || schedule_kind == "slow-site-perturbed") return BoundaryRegime::periodic();
    if (beta < 1.0) return BoundaryRegime::periodic();
    if (beta > 1.0) return BoundaryRegime::neumann();
    return BoundaryRegime::robin(robin_coefficient());
  }

  // alpha/k for slow bonds; alpha/2 (conjectural) for a slow site at beta=1.
  double robin_coefficient() const {
    if (robin_c >= 0.0) return robin_c;
    if (schedule_kind == "slow-bonds") return alpha / k;
    return alpha / 2.0;
  }

  SiteRule rule() const {
    if (site_rule == "plain") return SiteRule::plain;
    if (site_rule == "interpolated") return SiteRule::interpolated;
    if (site_rule == "robin") return SiteRule::robin;
    return schedule_kind == "slow-bonds" && beta == 1.0 ? SiteRule::robin : SiteRule::plain;
  }

  std::size_t mollifier_window() const {
    return window > 0 ? window : static_cast<std::size_t>(std::ceil(static_cast<double>(n) / 64.0));
  }

  double pde_step() const {
    const double h = 1.0 / static_cast<double>(pde_m);
    return pde_dt > 0.0 ? pde_dt : h * h / 2.0;
  }
};

namespace detail {

template <class T>
T parse_number(const KeyValues& kv, const std::string& key, T fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::istringstream in(it->second);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) throw ConfigError(key + ": cannot parse '" + it->second + "'");
  return v;
}

inline std::string get(const KeyValues& kv, const std::string& key, std::string fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

inline bool parse_bool(const KeyValues& kv, const std::string& key, bool fallback) {
  const auto v = get(kv, key, fallback ? "true" : "false");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

}  // namespace detail

inline unsigned default_workers() {
  if (const char* env = std::getenv("DEFECT_SSEP_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return static_cast<unsigned>(w);
    } catch (const std::exception&) {
    }
    throw ConfigError("DEFECT_SSEP_WORKERS: expected a positive integer");
  }
  return 1;
}

inline ExperimentConfig make_config(const KeyValues& kv) {
  using detail::get;
  using detail::parse_number;
  using detail::require;
  for (const auto& [key, value] : kv) {
    bool known = false;
    for (const auto& k : config_keys()) known = known || key == k.key;
    require(known, key, "unknown key");
  }

  ExperimentConfig c;
  c.name = get(kv, "experiment.name", c.name);
  require(!c.name.empty() && c.name.find_first_of(",\"\n") == std::string::npos, "experiment.name",
          "must be nonempty without commas or quotes");

  const long n = parse_number<long>(kv, "lattice.n", static_cast<long>(c.n));
  require(n >= 3, "lattice.n", "must be at least 3");
  c.n = static_cast<std::size_t>(n);
  const auto geo = get(kv, "lattice.geometry", "torus");
  require(geo == "torus" || geo == "line", "lattice.geometry", "must be torus or line");
  c.geometry = geo == "torus" ? Geometry::torus : Geometry::line;
  const long r = parse_number<long>(kv, "lattice.radius", static_cast<long>(c.n / 2));
  require(r >= 2, "lattice.radius", "must be at least 2");
  c.radius = static_cast<std::size_t>(r);
  require(c.geometry == Geometry::line || !kv.count("lattice.radius"), "lattice.radius", "only applies to the line");

  c.schedule_kind = get(kv, "schedule.kind", c.schedule_kind);
  require(c.schedule_kind == "uniform" || c.schedule_kind == "slow-site-perturbed" || c.schedule_kind == "slow-site" ||
              c.schedule_kind == "slow-bonds",
          "schedule.kind", "must be uniform, slow-site-perturbed, slow-site or slow-bonds");
  c.alpha = parse_number(kv, "schedule.alpha", c.alpha);
  require(c.alpha > 0.0, "schedule.alpha", "must be positive");
  c.beta = parse_number(kv, "schedule.beta", c.beta);
  require(c.beta >= 0.0, "schedule.beta", "must be nonnegative");
  c.c = parse_number(kv, "schedule.c", c.c);
  require(std::isfinite(c.c) && 1.0 + c.c / std::sqrt(static_cast<double>(c.n)) > 0.0, "schedule.c",
          "must keep g(n) = 1 + c/sqrt(n) positive");
  c.k = parse_number(kv, "schedule.k", c.k);
  require(c.k >= 1, "schedule.k", "must be at least 1");
  if (c.schedule_kind == "slow-bonds") {
    const long span = c.geometry == Geometry::torus ? static_cast<long>(c.n) - 1 : static_cast<long>(c.radius);
    require(c.k < span, "schedule.k", "slow bonds must fit inside the lattice");
  }

  const auto init = get(kv, "initial.kind", "profile");
  require(init == "profile" || init == "equilibrium", "initial.kind", "must be profile or equilibrium");
  c.equilibrium = init == "equilibrium";
  c.profile = get(kv, "initial.profile", c.profile);
  if (!c.equilibrium) {
    try {
      InitialProfile::from_id(c.profile);
    } catch (const Error& e) {
      throw ConfigError(std::string("initial.profile: ") + e.what());
    }
    require(c.geometry == Geometry::torus, "initial.profile", "profile starts need the torus geometry");
  }
  c.p = parse_number(kv, "initial.p", c.p);
  require(c.p > 0.0 && c.p < 1.0, "initial.p", "must lie in (0,1)");
  c.condition_origin = detail::parse_bool(kv, "initial.condition_origin", false);

  const double t_end = parse_number(kv, "time.t_end", c.times.back());
  require(t_end > 0.0, "time.t_end", "must be positive");
  if (kv.count("time.list")) {
    c.times.clear();
    for (const auto& s : split_list(get(kv, "time.list", ""))) {
      try {
        c.times.push_back(std::stod(s));
      } catch (const std::exception&) {
        throw ConfigError("time.list: cannot parse '" + s + "'");
      }
    }
    require(!c.times.empty(), "time.list", "must list at least one time");
    for (std::size_t i = 0; i < c.times.size(); ++i)
      require(c.times[i] > (i ? c.times[i - 1] : 0.0), "time.list", "times must be positive and increasing");
  } else {
    const long k = parse_number<long>(kv, "time.samples", 1);
    require(k >= 1, "time.samples", "must be at least 1");
    c.times.clear();
    for (long j = 1; j <= k; ++j) c.times.push_back(t_end * static_cast<double>(j) / static_cast<double>(k));
  }

  const long reps = parse_number<long>(kv, "run.replicas", 1);
  require(reps >= 1, "run.replicas", "must be at least 1");
  c.replicas = static_cast<std::size_t>(reps);
  c.seed = parse_number<std::uint64_t>(kv, "run.seed", c.seed);
  const long w = parse_number<long>(kv, "run.workers", static_cast<long>(default_workers()));
  require(w >= 1, "run.workers", "must be at least 1");
  c.workers = static_cast<unsigned>(w);
  const auto eng = get(kv, "run.engine", "gillespie");
  require(eng == "gillespie" || eng == "graphical", "run.engine", "must be gillespie or graphical");
  c.engine = eng == "gillespie" ? Engine::gillespie : Engine::graphical;

  if (kv.count("observables.list")) c.observables = split_list(get(kv, "observables.list", ""));
  require(!c.observables.empty(), "observables.list", "must request at least one observable");
  for (const auto& o : c.observables)
    require(o == "density" || o == "pairing" || o == "field" || o == "martingale" || o == "occupation" || o == "kv",
            "observables.list", "unknown observable '" + o + "'");
  c.testfns = split_list(get(kv, "observables.testfn", ""));
  const auto mode = get(kv, "observables.mode", c.equilibrium ? "fluctuation" : "hydrodynamic");
  require(mode == "hydrodynamic" || mode == "fluctuation", "observables.mode", "must be hydrodynamic or fluctuation");
  c.mode = mode == "hydrodynamic" ? ActionMode::hydrodynamic : ActionMode::fluctuation;
  c.site_rule = get(kv, "observables.site_rule", c.site_rule);
  require(c.site_rule == "auto" || c.site_rule == "plain" || c.site_rule == "interpolated" || c.site_rule == "robin",
          "observables.site_rule", "must be auto, plain, interpolated or robin");
  const long win = parse_number<long>(kv, "observables.window", 0);
  require(win >= 0, "observables.window", "must be nonnegative");
  c.window = static_cast<std::size_t>(win);

  const bool needs_h = c.wants("pairing") || c.wants("field") || c.wants("martingale");
  require(!needs_h || !c.testfns.empty(), "observables.testfn", "pairing, field and martingale need test functions");
  if (c.wants("field") || (c.wants("martingale") && c.mode == ActionMode::fluctuation))
    require(c.equilibrium, "observables.list", "the fluctuation field is centred by nu_p and needs an equilibrium start");
  if (c.wants("density") && c.geometry == Geometry::line)
    require(false, "observables.list", "density profiles are compared on the torus only");
  if (c.wants("kv")) require(c.schedule_kind == "slow-site", "observables.list", "kv needs a slow-site schedule");
  const bool functional = c.wants("martingale") || c.wants("occupation") || c.wants("kv");
  require(!(functional && c.engine == Engine::graphical), "run.engine",
          "martingale, occupation and kv are time integrals and need the gillespie engine");

  const long m = parse_number<long>(kv, "pde.m", static_cast<long>(c.pde_m));
  require(m >= 4, "pde.m", "must be at least 4");
  c.pde_m = static_cast<std::size_t>(m);
  c.pde_dt = parse_number(kv, "pde.dt", c.pde_dt);
  require(c.pde_dt >= 0.0, "pde.dt", "must be nonnegative");
  c.pde_regime = get(kv, "pde.regime", c.pde_regime);
  require(c.pde_regime == "auto" || c.pde_regime == "periodic" || c.pde_regime == "neumann" ||
              c.pde_regime == "robin",
          "pde.regime", "must be auto, periodic, neumann or robin");
  c.robin_c = parse_number(kv, "pde.robin_c", c.robin_c);
  require(c.robin_c == -1.0 || c.robin_c >= 0.0, "pde.robin_c", "must be nonnegative");
  if (kv.count("assert.l1_max")) {
    c.l1_max = parse_number(kv, "assert.l1_max", 0.0);
    require(*c.l1_max >= 0.0, "assert.l1_max", "must be nonnegative");
  }
  c.out_dir = get(kv, "output.dir", "");

  try {
    c.schedule().g(static_cast<double>(c.n));
    if (!c.testfns.empty()) c.test_functions();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  return c;
}

}  // namespace dssep::harness
