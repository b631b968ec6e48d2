#include <gtest/gtest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "dssep/dynamics.hpp"
#include "dssep/measures.hpp"

using namespace dssep;

TEST(GillespieStep, FrozenConfigurationHasInfiniteWait) {
  auto rng = make_rng(1);
  const auto out = gillespie_step(Configuration{1, 1, 1, 1}, Lattice::torus(4), RateSchedule::uniform(), 4.0, rng);
  EXPECT_TRUE(std::isinf(out.waiting_time));
  EXPECT_FALSE(out.jump.has_value());
  EXPECT_EQ(out.config, (Configuration{1, 1, 1, 1}));
}

TEST(GillespieStep, SingleParticleTotalRateTwo) {
  // eta = (1,0,0) on the uniform 3-torus: R = 2, jumps 0->1 and 0->2 equally likely.
  auto rng = make_rng(7);
  const auto t = Lattice::torus(3);
  const int trials = 40000;
  int right = 0;
  double wait = 0.0;
  for (int i = 0; i < trials; ++i) {
    const auto out = gillespie_step(Configuration{1, 0, 0}, t, RateSchedule::uniform(), 3.0, rng);
    ASSERT_TRUE(out.jump.has_value());
    right += out.jump->second == 1 ? 1 : 0;
    wait += out.waiting_time;
  }
  EXPECT_NEAR(static_cast<double>(right) / trials, 0.5, 4.0 * 0.5 / std::sqrt(trials));
  EXPECT_NEAR(wait / trials, 0.5, 4.0 * 0.5 / std::sqrt(trials));
}

// Total rate kept by the incremental channel lists must equal the rate of
// every active channel recomputed from the configuration.
TEST(GillespieEngine, IncrementalListsMatchRebuild) {
  for (const auto& schedule :
       {RateSchedule::uniform(), RateSchedule::slow_site_power(0.5, 1.0), RateSchedule::slow_bonds(3, 2.0, 0.5)}) {
    for (const auto& lat : {Lattice::torus(17), Lattice::line(9)}) {
      auto rng = make_rng(3);
      auto init = sample(ProductMeasure::from_marginals(std::vector<double>(lat.size(), 0.5)), lat, rng);
      GillespieEngine e(lat, schedule, 17.0, init, 11);
      for (int k = 0; k < 2000; ++k) {
        e.step();
        double expect = 0.0;
        for (std::size_t c = 0; c < e.channels().count(); ++c)
          if (e.channels().active(c, e.configuration())) expect += e.channels().rate(c);
        ASSERT_NEAR(e.total_rate(), expect, 1e-9) << schedule.label() << " step " << k;
      }
    }
  }
}

TEST(GillespieEngine, TrackedFunctionalsMatchDirectSums) {
  const auto lat = Lattice::torus(12);
  auto rng = make_rng(5);
  auto init = sample(ProductMeasure::from_marginals(std::vector<double>(12, 0.4)), lat, rng);
  GillespieEngine e(lat, RateSchedule::slow_site_power(1.0, 1.0), 12.0, init, 2);
  std::vector<double> w(12), cw(24);
  for (std::size_t i = 0; i < 12; ++i) w[i] = std::sin(0.7 * static_cast<double>(i));
  for (std::size_t c = 0; c < 24; ++c) cw[c] = std::cos(0.3 * static_cast<double>(c));
  const auto s = e.add_site_functional(w);
  const auto ch = e.add_channel_functional(cw);
  double si = 0.0, ci = 0.0;
  for (int k = 0; k < 3000; ++k) {
    double sv = 0.0, cv = 0.0;
    for (std::size_t i = 0; i < 12; ++i) sv += e.configuration()[i] ? w[i] : 0.0;
    for (std::size_t c = 0; c < 24; ++c)
      if (e.channels().active(c, e.configuration())) cv += e.channels().rate(c) * cw[c];
    ASSERT_NEAR(e.site_functional(s).value, sv, 1e-10);
    ASSERT_NEAR(e.channel_functional(ch).value, cv, 1e-10);
    const double dt = e.step();
    si += sv * dt;
    ci += cv * dt;
  }
  EXPECT_NEAR(e.site_functional(s).integral, si, 1e-8 * (1 + std::abs(si)));
  EXPECT_NEAR(e.channel_functional(ch).integral, ci, 1e-8 * (1 + std::abs(ci)));
}

TEST(GillespieEngine, ConservesParticlesAndIsDeterministic) {
  const auto lat = Lattice::torus(64);
  auto rng = make_rng(9);
  auto init = sample(ProductMeasure::from_marginals(std::vector<double>(64, 0.3)), lat, rng);
  const std::vector<double> times{0.0, 0.01, 0.02};
  const auto a = simulate(lat, RateSchedule::slow_site_power(1.0, 0.5), 64.0, init, times, 42, true);
  const auto b = simulate(lat, RateSchedule::slow_site_power(1.0, 0.5), 64.0, init, times, 42, true);
  const auto c = simulate(lat, RateSchedule::slow_site_power(1.0, 0.5), 64.0, init, times, 43, true);
  ASSERT_EQ(a.snapshots.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.snapshots[i], b.snapshots[i]);
    EXPECT_EQ(a.snapshots[i].particle_count(), init.particle_count());
  }
  EXPECT_EQ(a.events.size(), b.events.size());
  EXPECT_NE(a.events.size(), c.events.size());
  // Replaying the recorded jumps reproduces the final snapshot.
  Configuration replay = init;
  for (const auto& ev : a.events) replay.exchange(ev.from, ev.to);
  EXPECT_EQ(replay, a.snapshots.back());
}

TEST(Simulate, RejectsBadSampleTimes) {
  const auto lat = Lattice::torus(4);
  const std::vector<double> no_zero{0.1, 0.2}, decreasing{0.0, 0.2, 0.1};
  EXPECT_THROW(simulate(lat, RateSchedule::uniform(), 4.0, Configuration(4), no_zero, 1), DomainError);
  EXPECT_THROW(simulate(lat, RateSchedule::uniform(), 4.0, Configuration(4), decreasing, 1), DomainError);
}

TEST(Graphical, EmptyConfigurationStaysEmpty) {
  const auto lat = Lattice::torus(8);
  EventStream ev(lat, RateSchedule::uniform(), 8.0, 3);
  EXPECT_EQ(graphical_step(Configuration(8), ev, 50.0), Configuration(8));
}

TEST(Graphical, FixedClockExamples) {
  const auto lat = Lattice::torus(4);
  // An arrival on an occupied -> empty channel moves the particle; otherwise nothing.
  Configuration c{1, 0, 0, 0};
  detail::apply_arrival(c, lat, {0.1, 0, +1});
  EXPECT_EQ(c, (Configuration{0, 1, 0, 0}));
  detail::apply_arrival(c, lat, {0.2, 0, +1});
  EXPECT_EQ(c, (Configuration{0, 1, 0, 0}));
  Configuration d{1, 1, 0, 0};
  detail::apply_arrival(d, lat, {0.3, 0, +1});
  EXPECT_EQ(d, (Configuration{1, 1, 0, 0}));
  detail::apply_arrival(d, lat, {0.4, 0, -1});
  EXPECT_EQ(d, (Configuration{0, 1, 0, 1}));
}

TEST(Graphical, StreamsReplayAndRejectRewind) {
  const auto lat = Lattice::torus(20);
  EventStream a(lat, RateSchedule::slow_site_power(1.0, 1.0), 20.0, 5);
  EventStream b(lat, RateSchedule::slow_site_power(1.0, 1.0), 20.0, 5);
  for (int k = 0; k < 500; ++k) {
    const auto x = a.pop(), y = b.pop();
    ASSERT_EQ(x.tau, y.tau);
    ASSERT_EQ(x.site, y.site);
    ASSERT_EQ(x.dir, y.dir);
  }
  EXPECT_THROW(graphical_step(Configuration(20), a, a.position() / 2), DomainError);
}

TEST(Graphical, CouplingPreservesOrder) {
  const auto lat = Lattice::torus(32);
  auto rng = make_rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    auto lower = sample(ProductMeasure::from_marginals(std::vector<double>(32, 0.3)), lat, rng);
    auto upper = lower;
    for (std::size_t i = 0; i < 32; ++i)
      if (uniform01(rng) < 0.4) upper.set(i, true);
    EventStream ev(lat, RateSchedule::slow_bonds(2, 1.0, 1.0), 32.0, 100 + trial);
    for (double until : {10.0, 50.0, 200.0}) {
      std::tie(lower, upper) = coupled_evolve(std::move(lower), std::move(upper), ev, until);
      ASSERT_TRUE(lower.below(upper));
    }
  }
  {
    // Equal inputs stay equal; an empty lower configuration stays empty.
    EventStream ev(lat, RateSchedule::slow_site_power(1.0, 2.0), 32.0, 9);
    Configuration a(32), b = Configuration::full(32);
    b.set(5, false);
    auto c = a;
    for (double until : {5.0, 20.0}) {
      std::tie(a, b) = coupled_evolve(std::move(a), std::move(b), ev, until);
      EXPECT_EQ(a, Configuration(32));
    }
    auto d = c;
    EventStream ev2(lat, RateSchedule::uniform(), 32.0, 10);
    c.set(3, true);
    d.set(3, true);
    std::tie(c, d) = coupled_evolve(std::move(c), std::move(d), ev2, 30.0);
    EXPECT_EQ(c, d);
  }
  EventStream ev(Lattice::torus(3), RateSchedule::uniform(), 3.0, 1);
  EXPECT_THROW(coupled_evolve(Configuration{1, 0, 0}, Configuration{0, 1, 0}, ev, 1.0), OrderingError);
}

// Empirical law at microscopic time tau from both engines against the exact
// distribution mu0 exp(tau L) on a 5-site torus.
TEST(Engines, MatchExactLawOnFiveSites) {
  const auto lat = Lattice::torus(5);
  const auto schedule = RateSchedule::slow_site_power(1.0, 1.0);
  const double n = 5.0, tau = 0.6;
  const Configuration init{1, 1, 0, 0, 0};
  std::vector<double> mu0(32, 0.0);
  mu0[init.state()] = 1.0;
  const auto exact = evolve_distribution(mu0, exact_generator(lat, schedule, n), tau);

  const int runs = 40000;
  std::vector<double> gil(32, 0.0), gra(32, 0.0);
  const std::vector<double> times{0.0, SimClock{n}.macroscopic(tau)};
  for (int r = 0; r < runs; ++r) {
    const auto tr = simulate(lat, schedule, n, init, times, derive_seed(1, {static_cast<std::uint64_t>(r)}));
    gil[tr.snapshots.back().state()] += 1.0 / runs;
    EventStream ev(lat, schedule, n, derive_seed(2, {static_cast<std::uint64_t>(r)}));
    gra[graphical_step(init, ev, tau).state()] += 1.0 / runs;
  }
  for (std::size_t s = 0; s < 32; ++s) {
    const double se = std::sqrt(exact[s] * (1 - exact[s]) / runs);
    EXPECT_NEAR(gil[s], exact[s], 5 * se + 1e-12) << "gillespie state " << s;
    EXPECT_NEAR(gra[s], exact[s], 5 * se + 1e-12) << "graphical state " << s;
  }
}
