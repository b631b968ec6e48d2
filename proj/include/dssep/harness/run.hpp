#pragma once

// Replica execution. Replica r draws its initial configuration from
// derive_seed(seed, {r, 0}) and drives its dynamics from derive_seed(seed,
// {r, 1}), so results do not depend on worker count or completion order.

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dssep/dynamics.hpp"
#include "dssep/harness/compare.hpp"
#include "dssep/harness/config.hpp"
#include "dssep/harness/results.hpp"
#include "dssep/measures.hpp"
#include "dssep/observables.hpp"
#include "dssep/pde.hpp"

namespace dssep::harness {

struct RunOutput {
  ResultTable table;
  std::vector<std::string> warnings;
  std::size_t frozen_replicas = 0;
};

inline ProductMeasure initial_measure(const ExperimentConfig& cfg, const Lattice& lattice,
                                      const RateSchedule& schedule) {
  const double n = static_cast<double>(cfg.n);
  if (cfg.equilibrium) return ProductMeasure::invariant(lattice, cfg.p, schedule, n);
  return ProductMeasure::from_profile(lattice, InitialProfile::from_id(cfg.profile), n);
}

namespace detail {

struct ReplicaResult {
  std::vector<Record> records;
  bool frozen = false;
};

inline ReplicaResult run_replica(const ExperimentConfig& cfg, const Lattice& lattice, const RateSchedule& schedule,
                                 const ProductMeasure& measure, const std::vector<TestFunction>& hs,
                                 const std::vector<std::vector<double>>& values, std::size_t r) {
  const double n = static_cast<double>(cfg.n);
  const auto rid = static_cast<std::uint64_t>(r);
  auto rng = make_rng(derive_seed(cfg.seed, {rid, 0}));
  Configuration config = sample(measure, lattice, rng, cfg.condition_origin);
  ReplicaResult out;
  auto emit = [&](double t, const std::string& obs, const std::string& id, double v) {
    out.records.push_back({cfg.name, static_cast<long>(r), t, obs, id, v});
  };

  std::vector<FluctuationField> fields;
  if (cfg.wants("field"))
    for (const auto& a : values) fields.emplace_back(lattice, a, measure, n);

  auto snapshot = [&](double t, const Configuration& c) {
    if (cfg.wants("density"))
      for (std::size_t i = 0; i < lattice.size(); ++i) emit(t, "density", std::to_string(lattice.label(i)), c[i]);
    if (cfg.wants("pairing"))
      for (std::size_t j = 0; j < hs.size(); ++j) emit(t, "pairing", hs[j].id(), pair(c, values[j], n));
    for (std::size_t j = 0; j < fields.size(); ++j) emit(t, "field", hs[j].id(), fields[j](c));
  };

  snapshot(0.0, config);
  if (cfg.engine == Engine::graphical) {
    EventStream events(lattice, schedule, n, derive_seed(cfg.seed, {rid, 1}));
    const SimClock clock{n};
    for (double t : cfg.times) {
      config = graphical_step(std::move(config), events, clock.microscopic(t));
      snapshot(t, config);
    }
    return out;
  }

  GillespieEngine engine(lattice, schedule, n, std::move(config), derive_seed(cfg.seed, {rid, 1}));
  std::vector<MartingaleTracker> trackers;
  if (cfg.wants("martingale"))
    for (const auto& a : values) trackers.emplace_back(engine, a, cfg.mode);
  std::optional<OriginOccupation> occupation;
  if (cfg.wants("occupation")) occupation.emplace(engine);
  std::size_t kv = 0;
  if (cfg.wants("kv")) kv = engine.add_channel_functional(kipnis_varadhan_weights(engine.channels(), n));

  for (double t : cfg.times) {
    engine.advance_to(t);
    snapshot(t, engine.configuration());
    for (std::size_t j = 0; j < trackers.size(); ++j) {
      trackers[j].sample();
      const auto& p = trackers[j].path();
      emit(t, "martingale", hs[j].id(), p.martingale.back());
      emit(t, "qv", hs[j].id(), p.quadratic_variation.back());
      emit(t, "integral", hs[j].id(), p.integral_term.back());
    }
    if (occupation) emit(t, "occupation", "", occupation->value());
    if (cfg.wants("kv")) emit(t, "kv", "", engine.clock().macroscopic(engine.channel_functional(kv).integral));
  }
  out.frozen = engine.frozen();
  return out;
}

}  // namespace detail

inline RunOutput run(const ExperimentConfig& cfg) {
  RunOutput result;
  const Lattice lattice = cfg.lattice();
  const RateSchedule schedule = cfg.schedule();
  const ProductMeasure measure = initial_measure(cfg, lattice, schedule);
  const auto hs = cfg.test_functions();
  const double n = static_cast<double>(cfg.n);

  if (cfg.geometry == Geometry::line) {
    const double needed = 6.0 * std::sqrt(cfg.t_end()) * n;
    if (static_cast<double>(cfg.radius) < needed)
      result.warnings.push_back("line radius " + std::to_string(cfg.radius) + " is below the diffusive range " +
                                std::to_string(static_cast<long>(std::ceil(needed))) + " (6 sqrt(t) n)");
  }

  std::vector<std::vector<double>> values;
  for (const auto& h : hs) values.push_back(site_values(lattice, h, n, cfg.rule(), cfg.k));

  std::vector<detail::ReplicaResult> slots(cfg.replicas);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= cfg.replicas) return;
      try {
        slots[r] = detail::run_replica(cfg, lattice, schedule, measure, hs, values, r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.replicas;
      }
    }
  };
  const unsigned w = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(cfg.replicas)));
  if (w == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < w; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& s : slots) {
    for (auto& rec : s.records) result.table.add(std::move(rec));
    result.frozen_replicas += s.frozen ? 1 : 0;
  }
  if (result.frozen_replicas > 0)
    result.warnings.push_back(std::to_string(result.frozen_replicas) + " replica(s) reached a frozen state");
  return result;
}

// Replica-mean density by torus label at time t.
inline std::vector<double> mean_density(const ResultTable& table, std::size_t n, double t) {
  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (const auto& r : table.records()) {
    if (r.observable != "density" || r.t != t) continue;
    const auto x = static_cast<std::size_t>(std::stol(r.testfn));
    sum[x] += r.value;
    ++count[x];
  }
  for (std::size_t x = 0; x < n; ++x) {
    if (count[x] == 0) throw AlignmentError("no density records at t = " + std::to_string(t));
    sum[x] /= static_cast<double>(count[x]);
  }
  return sum;
}

inline PdeSolution reference_solution(const ExperimentConfig& cfg, const BoundaryRegime& regime) {
  const auto rho0 = cell_values(InitialProfile::from_id(cfg.profile), cfg.pde_m);
  return solve(regime, rho0, cfg.times, cfg.pde_step());
}

struct ProfileReport {
  double t = 0.0;
  ProfileDistance distance;
};

// Profile error at every sample time against the given regime.
inline std::vector<ProfileReport> profile_errors(const ExperimentConfig& cfg, const ResultTable& table,
                                                 const BoundaryRegime& regime) {
  if (cfg.equilibrium) throw AlignmentError("profile comparison needs a profile start");
  const auto pde = reference_solution(cfg, regime);
  std::vector<ProfileReport> out;
  for (double t : cfg.times)
    out.push_back({t, compare_profiles(mean_density(table, cfg.n, t), cfg.schedule(), pde, t, cfg.mollifier_window())});
  return out;
}

}  // namespace dssep::harness
