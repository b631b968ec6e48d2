#pragma once

// Empirical pairings, block averages, the equilibrium fluctuation field,
// the generator action on linear functionals, Dynkin martingales with their
// quadratic variation, and occupation-time functionals at the origin.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dssep/dynamics.hpp"
#include "dssep/error.hpp"
#include "dssep/measures.hpp"
#include "dssep/model.hpp"
#include "dssep/test_function.hpp"

namespace dssep {

// Macroscopic position of storage index i: torus labels are read in
// (-n/2, n/2] so that functions on the line see the defect at 0; functions
// on [0,1] wrap on their own.
inline double site_position(const Lattice& lattice, std::size_t i, double n) {
  long x = lattice.label(i);
  if (lattice.geometry() == Geometry::torus) {
    const long s = static_cast<long>(lattice.size());
    if (2 * x > s) x -= s;
  }
  return static_cast<double>(x) / n;
}

enum class SiteRule {
  plain,         // H(x/n)
  interpolated,  // H(x/n), but H(0/n) replaced by (H(1/n) + H(-1/n)) / 2
  robin          // G_n: linear interpolation of H(0-) and H(0+) on {0,...,k}
};

// Values of a test function at every storage index.
inline std::vector<double> site_values(const Lattice& lattice, const TestFunction& h, double n,
                                       SiteRule rule = SiteRule::plain, int k = 1) {
  std::vector<double> a(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) a[i] = h(site_position(lattice, i, n));
  if (rule == SiteRule::interpolated) {
    a[lattice.origin()] = 0.5 * (h(1.0 / n) + h(-1.0 / n));
  } else if (rule == SiteRule::robin) {
    if (k < 1) throw DomainError("robin interpolation needs k >= 1");
    const double lo = h.zero_minus(), hi = h.zero_plus();
    for (long x = 0; x <= k; ++x) {
      if (!lattice.contains(x)) throw DomainError("slow-bond region exceeds the lattice");
      a[lattice.index(x)] = lo + static_cast<double>(x) / k * (hi - lo);
    }
  }
  return a;
}

// <pi^n, H> = (1/n) sum_x a_x eta(x).
inline double pair(const Configuration& config, const std::vector<double>& a, double n) {
  double s = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i)
    if (config[i]) s += a[i];
  return s / n;
}

inline double pair(const Configuration& config, const Lattice& lattice, const TestFunction& h, double n) {
  return pair(config, site_values(lattice, h, n), n);
}

// Right and left block means over {1..L} and {-L..-1}, L = floor(eps n).
inline std::pair<double, double> block_averages(const Configuration& config, const Lattice& lattice, double eps,
                                                double n) {
  const auto len = static_cast<long>(std::floor(eps * n));
  if (len < 1) throw DomainError("block length floor(eps n) must be at least 1");
  if (2 * len >= static_cast<long>(lattice.size()))
    throw WindowOverlapError("blocks of length " + std::to_string(len) + " overlap");
  if (!lattice.contains(len) || !lattice.contains(-len)) throw DomainError("block leaves the lattice");
  double right = 0.0, left = 0.0;
  for (long y = 1; y <= len; ++y) {
    right += config[lattice.index(y)];
    left += config[lattice.index(-y)];
  }
  return {right / static_cast<double>(len), left / static_cast<double>(len)};
}

// Y^n(H) = n^{-1/2} sum_x H(x/n)(eta(x) - m_p(x)). Sites where
// |H(x/n)| <= 1e-14 max|H| are skipped.
class FluctuationField {
 public:
  FluctuationField(const Lattice& lattice, const std::vector<double>& a, const ProductMeasure& measure, double n) {
    if (measure.provenance() != Provenance::invariant)
      throw ProvenanceError("the fluctuation field needs an invariant measure");
    if (a.size() != lattice.size() || measure.size() != lattice.size())
      throw DomainError("fluctuation field size mismatch");
    double peak = 0.0;
    for (double v : a) peak = std::max(peak, std::abs(v));
    const double scale = 1.0 / std::sqrt(n);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i]) <= 1e-14 * peak) continue;
      index_.push_back(i);
      weight_.push_back(a[i] * scale);
      offset_ -= a[i] * scale * measure.marginal(i);
    }
  }

  FluctuationField(const Lattice& lattice, const TestFunction& h, const ProductMeasure& measure, double n,
                   SiteRule rule = SiteRule::plain)
      : FluctuationField(lattice, site_values(lattice, h, n, rule), measure, n) {}

  double operator()(const Configuration& config) const {
    double s = offset_;
    for (std::size_t j = 0; j < index_.size(); ++j)
      if (config[index_[j]]) s += weight_[j];
    return s;
  }

  std::size_t support_size() const { return index_.size(); }
  // Centering constant -n^{-1/2} sum H m_p.
  double offset() const { return offset_; }

 private:
  std::vector<std::size_t> index_;
  std::vector<double> weight_;
  double offset_ = 0.0;
};

inline double fluctuation_field(const Configuration& config, const Lattice& lattice, const TestFunction& h,
                                const ProductMeasure& measure, double n) {
  return FluctuationField(lattice, h, measure, n)(config);
}

enum class ActionMode { hydrodynamic, fluctuation };

struct GeneratorAction {
  double direct = 0.0;  // form (a): sum over admissible jumps
  double closed = 0.0;  // form (b): Laplacian decomposition
};

namespace detail {
// Graph Laplacian sum_{y ~ x} (a_y - a_x).
inline double laplacian_at(const Lattice& lattice, const std::vector<double>& a, std::size_t i) {
  double s = 0.0;
  for (int d : {-1, +1})
    if (auto j = lattice.neighbor(i, d)) s += a[*j] - a[i];
  return s;
}
}  // namespace detail

// n^2 L_n applied to <pi^n, H> (hydrodynamic) or to Y^n(H) (fluctuation),
// with H given by its site values a. Both forms are evaluated; a mismatch
// beyond 1e-9 of the natural scale raises ConsistencyError.
inline GeneratorAction generator_action_forms(const Configuration& config, const Lattice& lattice,
                                              const std::vector<double>& a, const RateSchedule& schedule, double n,
                                              ActionMode mode, double p = 0.5) {
  const double factor = mode == ActionMode::hydrodynamic ? n : n * std::sqrt(n);
  GeneratorAction out;

  // (a) sum over admissible jumps of rate times the change of the pairing.
  double direct = 0.0;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    if (!config[i]) continue;
    for (int d : {-1, +1}) {
      const auto j = lattice.neighbor(i, d);
      if (!j || config[*j]) continue;
      direct += schedule.channel_rate(lattice, n, lattice.label(i), d) * (a[*j] - a[i]);
    }
  }
  out.direct = factor * direct;

  // (b)
  const std::size_t o = lattice.origin();
  double closed = 0.0;
  if (schedule.kind() == DefectKind::slow_bonds) {
    // Site-by-site form: bulk Laplacian off {0..k}, and at each site of the
    // slow region the rates of its two bonds.
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      if (!config[i]) continue;
      double s = 0.0;
      for (int d : {-1, +1}) {
        if (auto j = lattice.neighbor(i, d)) {
          const long x = lattice.label(i);
          const double r = schedule.bond_rate(n, lattice, d > 0 ? x : x - 1);
          s += r * (a[*j] - a[i]);
        }
      }
      closed += s;
    }
    // In fluctuation mode the centering adds p sum_x sum_y r_xy (a_y - a_x),
    // which vanishes for symmetric bond rates.
  } else {
    const double g = schedule.kind() == DefectKind::slow_site ? schedule.g(n) : 1.0;
    const double lap0 = detail::laplacian_at(lattice, a, o);
    if (mode == ActionMode::hydrodynamic) {
      for (std::size_t i = 0; i < lattice.size(); ++i)
        if (i != o && config[i]) closed += detail::laplacian_at(lattice, a, i);
    } else {
      // Centred bulk sum; for x != 0 the centering is p.
      for (std::size_t i = 0; i < lattice.size(); ++i)
        if (i != o) closed += detail::laplacian_at(lattice, a, i) * ((config[i] ? 1.0 : 0.0) - p);
    }
    closed += g * lap0 * (config[o] ? 1.0 : 0.0);
    if (config[o]) {
      double edge = 0.0;
      for (int d : {-1, +1})
        if (auto j = lattice.neighbor(o, d); j && config[*j]) edge += a[*j] - a[o];
      closed += (1.0 - g) * edge;
    }
    if (mode == ActionMode::fluctuation) closed += -lap0 * p;  // Theta(n, p, H) / n^{3/2}
  }
  out.closed = factor * closed;

  double peak = 0.0;
  for (double v : a) peak = std::max(peak, std::abs(v));
  const double scale = std::max({std::abs(out.direct), std::abs(out.closed), factor * peak});
  if (std::abs(out.direct - out.closed) > 1e-9 * scale)
    throw ConsistencyError("generator action forms disagree: " + std::to_string(out.direct) + " vs " +
                           std::to_string(out.closed));
  return out;
}

inline double generator_action(const Configuration& config, const Lattice& lattice, const std::vector<double>& a,
                               const RateSchedule& schedule, double n, ActionMode mode, double p = 0.5) {
  return generator_action_forms(config, lattice, a, schedule, n, mode, p).direct;
}

// Channel weights for the drift and the carre du champ of the linear
// functional sum_x w_x eta(x): (w_to - w_from) and its square.
inline std::vector<double> drift_weights(const ChannelTable& table, const std::vector<double>& w) {
  std::vector<double> out(table.count(), 0.0);
  for (std::size_t c = 0; c < table.count(); ++c)
    if (table.target(c) != no_site) out[c] = w[table.target(c)] - w[table.source(c)];
  return out;
}

inline std::vector<double> carre_du_champ_weights(const ChannelTable& table, const std::vector<double>& w) {
  auto out = drift_weights(table, w);
  for (double& v : out) v *= v;
  return out;
}

// Weights of the linear functional whose Dynkin martingale is tracked:
// a/n for the pairing, a/sqrt(n) for the fluctuation field (the centering
// constant drops out of every increment).
inline std::vector<double> functional_weights(const std::vector<double>& a, double n, ActionMode mode) {
  const double s = mode == ActionMode::hydrodynamic ? 1.0 / n : 1.0 / std::sqrt(n);
  std::vector<double> w(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) w[i] = a[i] * s;
  return w;
}

struct MartingalePath {
  std::vector<double> times;
  std::vector<double> martingale;           // M_t
  std::vector<double> quadratic_variation;  // int_0^t n^2 Gamma ds
  std::vector<double> integral_term;        // int_0^t n^2 L F ds
  std::string accumulation;                 // "online" or "replay"
};

// Online tracking: attach to an engine before it runs, then sample.
class MartingaleTracker {
 public:
  MartingaleTracker(GillespieEngine& engine, const std::vector<double>& a, ActionMode mode)
      : engine_(&engine) {
    const auto w = functional_weights(a, engine.clock().n, mode);
    value_ = engine.add_site_functional(w);
    drift_ = engine.add_channel_functional(drift_weights(engine.channels(), w));
    qv_ = engine.add_channel_functional(carre_du_champ_weights(engine.channels(), w));
    start_ = engine.site_functional(value_).value;
    path_.accumulation = "online";
  }

  void sample() {
    const double f = engine_->site_functional(value_).value;
    const double drift = engine_->channel_functional(drift_).integral;
    path_.times.push_back(engine_->time());
    path_.integral_term.push_back(drift);
    path_.martingale.push_back(f - start_ - drift);
    path_.quadratic_variation.push_back(engine_->channel_functional(qv_).integral);
  }

  const MartingalePath& path() const { return path_; }

 private:
  GillespieEngine* engine_;
  std::size_t value_, drift_, qv_;
  double start_ = 0.0;
  MartingalePath path_;
};

// Replays a recorded trajectory and integrates exactly between events.
inline MartingalePath martingale_decomposition(const Trajectory& trajectory, const Lattice& lattice,
                                               const std::vector<double>& a, const RateSchedule& schedule,
                                               ActionMode mode) {
  if (!trajectory.has_events) throw DomainError("martingale replay needs a trajectory with its jump record");
  const double n = trajectory.n;
  const ChannelTable table(lattice, schedule, n);
  const auto w = functional_weights(a, n, mode);
  const auto dw = drift_weights(table, w);
  const auto qw = carre_du_champ_weights(table, w);

  Configuration config = trajectory.initial;
  double f = 0.0, drift_rate = 0.0, qv_rate = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i)
    if (config[i]) f += w[i];
  for (std::size_t c = 0; c < table.count(); ++c) {
    if (table.active(c, config)) {
      drift_rate += table.rate(c) * dw[c];
      qv_rate += table.rate(c) * qw[c];
    }
  }
  const double f0 = f;
  const SimClock clock{n};
  double tau = 0.0, drift = 0.0, qv = 0.0;
  MartingalePath path;
  path.accumulation = "replay";
  std::size_t e = 0;
  for (double t : trajectory.times) {
    for (; e < trajectory.events.size() && trajectory.events[e].t <= t; ++e) {
      const auto& ev = trajectory.events[e];
      const double te = clock.microscopic(ev.t);
      drift += drift_rate * (te - tau);
      qv += qv_rate * (te - tau);
      tau = te;
      const int d = lattice.neighbor(ev.from, +1) == ev.to ? +1 : -1;
      const std::size_t c = ChannelTable::channel(ev.from, d);
      config.exchange(ev.from, ev.to);
      f += w[ev.to] - w[ev.from];
      for_each_toggle(table, config, c, [&](std::size_t ch, bool on) {
        if (table.rate_class(ch) < 0) return;
        const double s = on ? table.rate(ch) : -table.rate(ch);
        drift_rate += s * dw[ch];
        qv_rate += s * qw[ch];
      });
    }
    const double ts = clock.microscopic(t);
    drift += drift_rate * (ts - tau);
    qv += qv_rate * (ts - tau);
    tau = ts;
    path.times.push_back(t);
    path.integral_term.push_back(drift);
    path.martingale.push_back(f - f0 - drift);
    path.quadratic_variation.push_back(qv);
  }
  return path;
}

// (n/t) int_0^t (1 - eta_s(0)) ds from the jump record.
inline double origin_occupation_functional(const Trajectory& trajectory, const Lattice& lattice, double t) {
  if (!trajectory.has_events) throw DomainError("occupation functional needs the jump record");
  if (t > trajectory.end_time() || !(t > 0.0)) throw DomainError("t must lie in (0, end time]");
  const std::size_t o = lattice.origin();
  bool occupied = trajectory.initial[o];
  double last = 0.0, vacant = 0.0;
  for (const auto& ev : trajectory.events) {
    if (ev.t > t) break;
    if (ev.from != o && ev.to != o) continue;
    if (!occupied) vacant += ev.t - last;
    last = ev.t;
    occupied = ev.to == o;
  }
  if (!occupied) vacant += t - last;
  return trajectory.n / t * vacant;
}

// Online variant: attach before running; value(t) after advancing to t.
class OriginOccupation {
 public:
  explicit OriginOccupation(GillespieEngine& engine) : engine_(&engine) {
    std::vector<double> w(engine.configuration().size(), 0.0);
    w[engine.channels().lattice().origin()] = 1.0;
    id_ = engine.add_site_functional(std::move(w));
  }

  double value() const {
    const double tau = engine_->microscopic_time();
    const double t = engine_->time();
    if (!(t > 0.0)) throw DomainError("occupation functional needs t > 0");
    const double vacant_tau = tau - engine_->site_functional(id_).integral;
    return engine_->clock().n / t * engine_->clock().macroscopic(vacant_tau);
  }

 private:
  GillespieEngine* engine_;
  std::size_t id_;
};

// Channel weights for n^{3/2} eta(1)(1 - eta(0)) - g n^{3/2} eta(0)(1 - eta(1)):
// +n^{3/2} on the jump 1 -> 0 and -n^{3/2} on the jump 0 -> 1 (the channel
// rates supply the factor g).
inline std::vector<double> kipnis_varadhan_weights(const ChannelTable& table, double n) {
  const Lattice& lattice = table.lattice();
  std::vector<double> w(table.count(), 0.0);
  const double s = n * std::sqrt(n);
  w[ChannelTable::channel(lattice.index(1), -1)] = s;
  w[ChannelTable::channel(lattice.index(0), +1)] = -s;
  return w;
}

}  // namespace dssep
