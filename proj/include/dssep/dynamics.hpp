#pragma once

// Continuous-time evolution of exclusion configurations. Two engines drive
// the same Markov process: an event-driven Gillespie sampler over jump
// channels, and the graphical construction with one Poisson clock per
// (site, direction). All user-facing times are macroscopic; the generator
// is accelerated by n^2 (tau = t * n^2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dssep/error.hpp"
#include "dssep/model.hpp"
#include "dssep/random.hpp"

namespace dssep {

struct SimClock {
  double n = 1.0;

  double microscopic(double t) const { return t * n * n; }
  double macroscopic(double tau) const { return tau / (n * n); }
};

inline constexpr std::size_t no_site = std::numeric_limits<std::size_t>::max();

// Static description of every directed jump channel. Channel c moves a
// particle from storage index c/2 to its neighbour on the left (c even) or
// right (c odd).
class ChannelTable {
 public:
  ChannelTable() = default;

  ChannelTable(const Lattice& lattice, const RateSchedule& schedule, double n) : lattice_(lattice) {
    const std::size_t s = lattice.size();
    target_.resize(2 * s);
    rate_.resize(2 * s);
    class_.resize(2 * s);
    for (std::size_t i = 0; i < s; ++i) {
      for (int d : {-1, +1}) {
        const std::size_t c = channel(i, d);
        const auto nb = lattice.neighbor(i, d);
        target_[c] = nb ? *nb : no_site;
        rate_[c] = nb ? schedule.channel_rate(lattice, n, lattice.label(i), d) : 0.0;
        class_[c] = -1;
        if (rate_[c] > 0.0) {
          auto it = std::find(class_rates_.begin(), class_rates_.end(), rate_[c]);
          if (it == class_rates_.end()) {
            class_rates_.push_back(rate_[c]);
            it = class_rates_.end() - 1;
          }
          class_[c] = static_cast<int>(it - class_rates_.begin());
        }
      }
    }
  }

  static std::size_t channel(std::size_t site, int dir) { return 2 * site + (dir > 0 ? 1 : 0); }

  const Lattice& lattice() const { return *lattice_; }
  std::size_t count() const { return rate_.size(); }
  std::size_t source(std::size_t c) const { return c >> 1; }
  int direction(std::size_t c) const { return (c & 1) ? +1 : -1; }
  std::size_t target(std::size_t c) const { return target_[c]; }
  double rate(std::size_t c) const { return rate_[c]; }
  int rate_class(std::size_t c) const { return class_[c]; }
  const std::vector<double>& class_rates() const { return class_rates_; }

  bool active(std::size_t c, const Configuration& config) const {
    return class_[c] >= 0 && config[c >> 1] && !config[target_[c]];
  }

 private:
  std::optional<Lattice> lattice_;
  std::vector<std::size_t> target_;
  std::vector<double> rate_;
  std::vector<int> class_;
  std::vector<double> class_rates_;
};

// Linear functional F(eta) = sum_x w_x eta(x), tracked along a run together
// with the exact time integral of F in microscopic time.
struct SiteFunctional {
  std::vector<double> weights;
  double value = 0.0;
  double integral = 0.0;
};

// Channel functional C(eta) = sum over active channels of rate_c * w_c, with
// its exact microscopic time integral. With w_c = a(target) - a(source) this
// is L applied to the site functional with weights a; with the squared
// difference it is the carre du champ.
struct ChannelFunctional {
  std::vector<double> weights;
  double value = 0.0;
  double integral = 0.0;
};

struct JumpEvent {
  double t = 0.0;  // macroscopic time of the jump
  std::size_t from = 0;
  std::size_t to = 0;
};

// Channels whose activity changes when channel c fires; `config` is the
// configuration after the jump. For s -> t along d exactly four channels
// change: s -> t closes and t -> s opens; behind s (w = s-d) either w -> s
// opens or s -> w closes; ahead of t (v = t+d) either t -> v opens or
// v -> t closes.
template <class F>
void for_each_toggle(const ChannelTable& table, const Configuration& config, std::size_t c, F&& f) {
  const std::size_t from = table.source(c), to = table.target(c);
  const int d = table.direction(c);
  f(c, false);
  f(ChannelTable::channel(to, -d), true);
  const std::size_t behind = table.target(ChannelTable::channel(from, -d));
  if (behind != no_site) {
    if (config[behind]) f(ChannelTable::channel(behind, d), true);
    else f(ChannelTable::channel(from, -d), false);
  }
  const std::size_t ahead = table.target(ChannelTable::channel(to, d));
  if (ahead != no_site) {
    if (config[ahead]) f(ChannelTable::channel(ahead, -d), false);
    else f(ChannelTable::channel(to, d), true);
  }
}

// Rejection-free Gillespie engine. Active channels are grouped by their
// (few) distinct rates; a jump toggles exactly four channels, so each event
// costs O(1) regardless of lattice size or rate disparity.
class GillespieEngine {
 public:
  GillespieEngine(const Lattice& lattice, const RateSchedule& schedule, double n, Configuration initial,
                  std::uint64_t seed)
      : table_(lattice, schedule, n), clock_{n}, config_(std::move(initial)), rng_(make_rng(seed)) {
    if (config_.size() != lattice.size()) throw DomainError("configuration size does not match lattice");
    members_.resize(table_.class_rates().size());
    position_.assign(table_.count(), -1);
    rebuild();
  }

  const Configuration& configuration() const { return config_; }
  const ChannelTable& channels() const { return table_; }
  const SimClock& clock() const { return clock_; }
  double time() const { return clock_.macroscopic(tau_); }
  double microscopic_time() const { return tau_; }
  std::uint64_t jumps() const { return jumps_; }
  bool frozen() const { return total_rate() == 0.0; }

  double total_rate() const {
    double r = 0.0;
    const auto& rates = table_.class_rates();
    for (std::size_t k = 0; k < rates.size(); ++k) r += rates[k] * static_cast<double>(members_[k].size());
    return r;
  }

  std::size_t add_site_functional(std::vector<double> weights) {
    if (weights.size() != config_.size()) throw DomainError("site functional size mismatch");
    SiteFunctional f{std::move(weights)};
    f.value = site_value(f);
    sites_.push_back(std::move(f));
    return sites_.size() - 1;
  }

  std::size_t add_channel_functional(std::vector<double> weights) {
    if (weights.size() != table_.count()) throw DomainError("channel functional size mismatch");
    ChannelFunctional f{std::move(weights)};
    f.value = channel_value(f);
    channel_fns_.push_back(std::move(f));
    return channel_fns_.size() - 1;
  }

  const SiteFunctional& site_functional(std::size_t id) const { return sites_[id]; }
  const ChannelFunctional& channel_functional(std::size_t id) const { return channel_fns_[id]; }

  void record_events(bool on) { record_ = on; }
  const std::vector<JumpEvent>& events() const { return events_; }

  // One event: returns the microscopic waiting time (+inf when frozen).
  double step() {
    const double total = total_rate();
    if (total == 0.0) return std::numeric_limits<double>::infinity();
    const double wait = next_event(total) - tau_;
    integrate(wait);
    tau_ += wait;
    pending_ = false;
    fire(select(total));
    return wait;
  }

  // Runs until macroscopic time t. An event past t stays pending, so the
  // path does not depend on where it is sampled.
  void advance_to(double t) {
    const double target = clock_.microscopic(t);
    if (target < tau_) throw DomainError("cannot advance backwards in time");
    for (;;) {
      const double total = total_rate();
      if (total == 0.0 || next_event(total) > target) break;
      step();
    }
    integrate(target - tau_);
    tau_ = target;
  }

 private:
  double next_event(double total) {
    if (!pending_) {
      next_ = tau_ - std::log(uniform_open(rng_)) / total;
      pending_ = true;
    }
    return next_;
  }

  std::size_t select(double total) {
    double v = uniform01(rng_) * total;
    const auto& rates = table_.class_rates();
    std::size_t k = 0;
    for (; k + 1 < rates.size(); ++k) {
      const double w = rates[k] * static_cast<double>(members_[k].size());
      if (v < w) break;
      v -= w;
    }
    while (members_[k].empty()) --k;  // guards against rounding at the top edge
    auto idx = static_cast<std::size_t>(v / rates[k]);
    idx = std::min(idx, members_[k].size() - 1);
    return members_[k][idx];
  }

  void fire(std::size_t c) {
    const std::size_t from = table_.source(c), to = table_.target(c);
    config_.exchange(from, to);
    ++jumps_;
    for (auto& f : sites_) f.value += f.weights[to] - f.weights[from];
    for_each_toggle(table_, config_, c, [this](std::size_t ch, bool on) { set_active(ch, on); });
    if (record_) events_.push_back({clock_.macroscopic(tau_), from, to});
    if ((jumps_ & ((std::uint64_t{1} << 22) - 1)) == 0) resync();
  }

  void set_active(std::size_t c, bool want) {
    const int k = table_.rate_class(c);
    if (k < 0 || (position_[c] >= 0) == want) return;
    auto& list = members_[k];
    if (want) {
      position_[c] = static_cast<std::int32_t>(list.size());
      list.push_back(static_cast<std::uint32_t>(c));
    } else {
      const auto p = static_cast<std::size_t>(position_[c]);
      const std::uint32_t last = list.back();
      list[p] = last;
      position_[last] = static_cast<std::int32_t>(p);
      list.pop_back();
      position_[c] = -1;
    }
    if (!channel_fns_.empty()) {
      const double r = want ? table_.rate(c) : -table_.rate(c);
      for (auto& f : channel_fns_) f.value += r * f.weights[c];
    }
  }

  void integrate(double dtau) {
    for (auto& f : sites_) f.integral += f.value * dtau;
    for (auto& f : channel_fns_) f.integral += f.value * dtau;
  }

  void rebuild() {
    for (auto& m : members_) m.clear();
    std::fill(position_.begin(), position_.end(), -1);
    for (std::size_t c = 0; c < table_.count(); ++c) {
      if (table_.active(c, config_)) {
        const int k = table_.rate_class(c);
        position_[c] = static_cast<std::int32_t>(members_[k].size());
        members_[k].push_back(static_cast<std::uint32_t>(c));
      }
    }
  }

  // Recomputes tracked values from scratch to shed accumulated rounding.
  void resync() {
    for (auto& f : sites_) f.value = site_value(f);
    for (auto& f : channel_fns_) f.value = channel_value(f);
  }

  double site_value(const SiteFunctional& f) const {
    double v = 0.0;
    for (std::size_t i = 0; i < config_.size(); ++i)
      if (config_[i]) v += f.weights[i];
    return v;
  }

  double channel_value(const ChannelFunctional& f) const {
    double v = 0.0;
    for (std::size_t c = 0; c < table_.count(); ++c)
      if (table_.active(c, config_)) v += table_.rate(c) * f.weights[c];
    return v;
  }

  ChannelTable table_;
  SimClock clock_;
  Configuration config_;
  Rng rng_;
  double tau_ = 0.0;
  double next_ = 0.0;  // absolute time of the drawn next event
  bool pending_ = false;
  std::uint64_t jumps_ = 0;
  std::vector<std::vector<std::uint32_t>> members_;
  std::vector<std::int32_t> position_;
  std::vector<SiteFunctional> sites_;
  std::vector<ChannelFunctional> channel_fns_;
  bool record_ = false;
  std::vector<JumpEvent> events_;
};

// Single Gillespie step by direct enumeration of the generator.
struct StepOutcome {
  Configuration config;
  double waiting_time = 0.0;  // microscopic
  std::optional<std::pair<long, long>> jump;  // labels (from, to)
};

inline StepOutcome gillespie_step(const Configuration& config, const Lattice& lattice, const RateSchedule& schedule,
                                  double n, Rng& rng) {
  std::vector<std::pair<long, long>> jumps;
  std::vector<double> rates;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const long x = lattice.label(i);
    for (int d : {-1, +1}) {
      const double r = jump_rate(schedule, lattice, n, x, d, config);
      if (r > 0.0) {
        jumps.emplace_back(x, x + d);
        rates.push_back(r);
      }
    }
  }
  double total = 0.0;
  for (double r : rates) total += r;
  if (total == 0.0) return {config, std::numeric_limits<double>::infinity(), std::nullopt};
  const double wait = -std::log(uniform_open(rng)) / total;
  double v = uniform01(rng) * total;
  std::size_t pick = 0;
  for (; pick + 1 < rates.size(); ++pick) {
    if (v < rates[pick]) break;
    v -= rates[pick];
  }
  const auto [x, y] = jumps[pick];
  return {swap(config, lattice, x, y), wait, jumps[pick]};
}

// Sampled path of the process.
struct Trajectory {
  std::vector<double> times;
  std::vector<Configuration> snapshots;
  std::uint64_t seed = 0;
  std::string schedule;
  double n = 0.0;
  Configuration initial;
  // Full jump record (only when requested); allows exact replay.
  bool has_events = false;
  std::vector<JumpEvent> events;
  double end_time() const { return times.empty() ? 0.0 : times.back(); }
};

inline void check_sample_times(std::span<const double> times) {
  if (times.empty() || times.front() != 0.0) throw DomainError("sample times must start at t=0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("sample times must be strictly increasing");
}

inline Trajectory simulate(const Lattice& lattice, const RateSchedule& schedule, double n, const Configuration& initial,
                           std::span<const double> sample_times, std::uint64_t seed, bool record_events = false) {
  check_sample_times(sample_times);
  GillespieEngine engine(lattice, schedule, n, initial, seed);
  engine.record_events(record_events);
  Trajectory tr;
  tr.seed = seed;
  tr.schedule = schedule.label();
  tr.n = n;
  tr.initial = initial;
  tr.has_events = record_events;
  for (double t : sample_times) {
    engine.advance_to(t);
    tr.times.push_back(t);
    tr.snapshots.push_back(engine.configuration());
  }
  if (record_events) tr.events = engine.events();
  return tr;
}

// Lazily realised Poisson clocks N^{-}_x, N^{+}_x, one per (site, direction),
// each with its own keyed random stream so any two streams built from the
// same seed replay identical arrivals. Times are microscopic.
class EventStream {
 public:
  struct Arrival {
    double tau = 0.0;
    std::size_t site = 0;
    int dir = 0;
  };

  EventStream(const Lattice& lattice, const RateSchedule& schedule, double n, std::uint64_t seed)
      : lattice_(lattice) {
    const std::size_t s = lattice.size();
    streams_.reserve(2 * s);
    rates_.resize(2 * s);
    for (std::size_t i = 0; i < s; ++i) {
      for (int d : {-1, +1}) {
        const std::size_t c = ChannelTable::channel(i, d);
        streams_.emplace_back(derive_seed(seed, {static_cast<std::uint64_t>(lattice.label(i)),
                                                 static_cast<std::uint64_t>(d > 0 ? 1 : 0)}));
        rates_[c] = lattice.neighbor(i, d) ? schedule.channel_rate(lattice, n, lattice.label(i), d) : 0.0;
      }
    }
    for (std::size_t c = 0; c < rates_.size(); ++c) {
      if (rates_[c] > 0.0) heap_.push({streams_[c].exponential(rates_[c]), c >> 1, (c & 1) ? +1 : -1});
    }
  }

  const Lattice& lattice() const { return lattice_; }
  double position() const { return position_; }
  bool exhausted() const { return heap_.empty(); }
  const Arrival& peek() const { return heap_.top(); }

  Arrival pop() {
    Arrival a = heap_.top();
    heap_.pop();
    position_ = a.tau;
    const std::size_t c = ChannelTable::channel(a.site, a.dir);
    heap_.push({a.tau + streams_[c].exponential(rates_[c]), a.site, a.dir});
    return a;
  }

 private:
  // Earliest arrival first; ties go to the smaller (site, direction).
  struct Later {
    bool operator()(const Arrival& a, const Arrival& b) const {
      if (a.tau != b.tau) return a.tau > b.tau;
      if (a.site != b.site) return a.site > b.site;
      return a.dir > b.dir;
    }
  };

  Lattice lattice_;
  std::vector<SplitMix64> streams_;
  std::vector<double> rates_;
  std::priority_queue<Arrival, std::vector<Arrival>, Later> heap_;
  double position_ = 0.0;
};

namespace detail {
inline void apply_arrival(Configuration& config, const Lattice& lattice, const EventStream::Arrival& a) {
  const auto target = lattice.neighbor(a.site, a.dir);
  if (target && config[a.site] && !(config[*target])) config.exchange(a.site, *target);
}

inline void check_until(const EventStream& events, double until) {
  if (until < events.position()) throw DomainError("graphical step target precedes the stream position");
}
}  // namespace detail

// Applies every clock arrival up to microscopic time `until`.
inline Configuration graphical_step(Configuration config, EventStream& events, double until) {
  detail::check_until(events, until);
  while (!events.exhausted() && events.peek().tau <= until) {
    detail::apply_arrival(config, events.lattice(), events.pop());
  }
  return config;
}

// Evolves an ordered pair under one shared set of clocks.
inline std::pair<Configuration, Configuration> coupled_evolve(Configuration lower, Configuration upper,
                                                              EventStream& events, double until) {
  if (!lower.below(upper)) throw OrderingError("coupled_evolve requires lower <= upper sitewise");
  detail::check_until(events, until);
  while (!events.exhausted() && events.peek().tau <= until) {
    const auto a = events.pop();
    detail::apply_arrival(lower, events.lattice(), a);
    detail::apply_arrival(upper, events.lattice(), a);
  }
  return {std::move(lower), std::move(upper)};
}

}  // namespace dssep
