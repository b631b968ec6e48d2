#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <vector>

#include "dssep/dynamics.hpp"
#include "dssep/measures.hpp"

using namespace dssep;

TEST(MarginalAtOrigin, Examples) {
  EXPECT_DOUBLE_EQ(marginal_at_origin(0.5, 1.0), 0.5);
  EXPECT_NEAR(marginal_at_origin(0.5, 0.1), 10.0 / 11.0, 1e-12);
  EXPECT_NEAR(marginal_at_origin(0.3, 1e-12), 1.0, 1e-9);
  EXPECT_THROW(marginal_at_origin(0.0, 1.0), DomainError);
  EXPECT_THROW(marginal_at_origin(0.5, 0.0), DomainError);
}

TEST(ProductMeasure, ProvenanceGuardsInvariantAccessors) {
  const auto lat = Lattice::torus(8);
  const auto prof = ProductMeasure::from_profile(lat, InitialProfile::cosine(), 8.0);
  EXPECT_THROW(prof.p(), ProvenanceError);
  EXPECT_THROW(prof.chi(), ProvenanceError);
  const auto inv = ProductMeasure::invariant(lat, 0.3, 0.5);
  EXPECT_DOUBLE_EQ(inv.chi(), 0.21);
  EXPECT_DOUBLE_EQ(inv.marginal(1), 0.3);
  EXPECT_DOUBLE_EQ(inv.marginal(0), marginal_at_origin(0.3, 0.5));
}

TEST(Sample, DegenerateMarginals) {
  const auto lat = Lattice::torus(16);
  auto rng = make_rng(1);
  EXPECT_EQ(sample(ProductMeasure::from_marginals(std::vector<double>(16, 0.0)), lat, rng), Configuration(16));
  EXPECT_EQ(sample(ProductMeasure::from_marginals(std::vector<double>(16, 1.0)), lat, rng), Configuration::full(16));
}

TEST(Sample, SiteMeansWithinThreeStandardErrors) {
  const auto lat = Lattice::torus(32);
  const auto mu = ProductMeasure::from_profile(lat, InitialProfile::cosine(0.5, 0.4), 32.0);
  auto rng = make_rng(123);
  const int draws = 100000;
  std::vector<double> mean(32, 0.0);
  for (int k = 0; k < draws; ++k) {
    const auto c = sample(mu, lat, rng);
    for (std::size_t i = 0; i < 32; ++i) mean[i] += c[i];
  }
  for (std::size_t i = 0; i < 32; ++i) {
    const double m = mu.marginal(i), se = std::sqrt(m * (1 - m) / draws);
    EXPECT_NEAR(mean[i] / draws, m, 3 * se + 1e-12) << "site " << i;
  }
}

TEST(Sample, ConditioningForcesOrigin) {
  const auto lat = Lattice::line(5);
  auto rng = make_rng(4);
  const auto mu = ProductMeasure::invariant(lat, 0.2, 3.0);
  for (int k = 0; k < 100; ++k) EXPECT_TRUE(sample(mu, lat, rng, true)[lat.origin()]);
}

TEST(ExactGenerator, HandEnumerationOnThreeSites) {
  const auto lat = Lattice::torus(3);
  const auto gen = exact_generator(lat, RateSchedule::uniform(), 3.0);
  for (std::size_t s : {1u, 2u, 4u}) {
    EXPECT_EQ(gen.row_start[s + 1] - gen.row_start[s], 2u);
    for (std::size_t k = gen.row_start[s]; k < gen.row_start[s + 1]; ++k) EXPECT_EQ(gen.rate[k], 1.0);
    EXPECT_EQ(gen.diagonal[s], -2.0);
  }
  EXPECT_EQ(gen.entry(1, 2), 1.0);
  EXPECT_EQ(gen.entry(1, 4), 1.0);
}

TEST(ExactGenerator, RowsSumToZeroAndFrozenRowsVanish) {
  for (std::size_t n = 3; n <= 8; ++n) {
    for (const auto& s : {RateSchedule::uniform(), RateSchedule::slow_site_power(1.0, 1.0),
                          RateSchedule::slow_bonds(2, 1.0, 1.0)}) {
      const auto lat = Lattice::torus(n);
      const auto gen = exact_generator(lat, s, static_cast<double>(n));
      for (std::size_t r = 0; r < gen.states(); ++r) {
        double sum = gen.diagonal[r];
        for (std::size_t k = gen.row_start[r]; k < gen.row_start[r + 1]; ++k) sum += gen.rate[k];
        ASSERT_NEAR(sum, 0.0, 1e-12);
      }
      EXPECT_EQ(gen.diagonal.front(), 0.0);
      EXPECT_EQ(gen.diagonal.back(), 0.0);
      EXPECT_EQ(gen.row_start[1], gen.row_start[0]);
    }
  }
  EXPECT_THROW(exact_generator(Lattice::torus(13), RateSchedule::uniform(), 13.0), CapacityError);
}

TEST(DetailedBalance, InvariantMeasureIsReversible) {
  const auto lat = Lattice::torus(3);
  const auto s = RateSchedule::slow_site_perturbed([](double) { return -0.8; });
  const auto gen = exact_generator(lat, s, 3.0);
  EXPECT_LT(verify_detailed_balance(ProductMeasure::invariant(lat, 0.4, 0.2), gen), 1e-12);
  EXPECT_LT(stationarity_residual(ProductMeasure::invariant(lat, 0.4, 0.2), gen), 1e-12);
  for (double p : {0.1, 0.5, 0.8}) {
    const auto l6 = Lattice::torus(6);
    EXPECT_LT(verify_detailed_balance(ProductMeasure::invariant(l6, p, 1.0),
                                      exact_generator(l6, RateSchedule::uniform(), 6.0)),
              1e-12);
  }
  // Same on the reflecting line and for slow bonds.
  const auto line = Lattice::line(3);
  const auto pw = RateSchedule::slow_site_power(1.0, 1.0);
  EXPECT_LT(verify_detailed_balance(ProductMeasure::invariant(line, 0.3, pw, 7.0), exact_generator(line, pw, 7.0)),
            1e-12);
  const auto sb = RateSchedule::slow_bonds(2, 1.0, 1.0);
  EXPECT_LT(verify_detailed_balance(ProductMeasure::invariant(line, 0.3, sb, 7.0), exact_generator(line, sb, 7.0)),
            1e-12);
}

TEST(DetailedBalance, NegativeControlDetectsWrongOriginMarginal) {
  const auto lat = Lattice::torus(3);
  const auto gen = exact_generator(lat, RateSchedule::slow_site_perturbed([](double) { return -0.8; }), 3.0);
  const auto wrong = ProductMeasure::from_marginals({0.4, 0.4, 0.4});
  EXPECT_GT(verify_detailed_balance(wrong, gen), 1e-3);
  EXPECT_GT(stationarity_residual(wrong, gen), 1e-3);
}

TEST(Dirichlet, ConstantDensityGivesZero) {
  const auto lat = Lattice::torus(4);
  const auto s = RateSchedule::slow_site_power(1.0, 1.0);
  const auto nu = ProductMeasure::invariant(lat, 0.5, s, 4.0);
  EXPECT_NEAR(dirichlet_form(std::vector<double>(16, 1.0), lat, s, 4.0, nu), 0.0, 1e-15);
}

TEST(Dirichlet, BondSumMatchesMatrixForm) {
  const auto lat = Lattice::torus(4);
  const auto s = RateSchedule::slow_site_power(1.0, 1.0);
  const auto nu = ProductMeasure::invariant(lat, 0.4, s, 4.0);
  const auto probs = nu.state_probabilities();
  // f proportional to 1 + 3 eta(0) + eta(1) eta(2), normalised under nu.
  std::vector<double> f(16);
  double z = 0.0;
  for (std::size_t st = 0; st < 16; ++st) {
    f[st] = 1.0 + 3.0 * (st & 1) + ((st >> 1) & 1) * ((st >> 2) & 1);
    z += f[st] * probs[st];
  }
  for (double& v : f) v /= z;
  const auto gen = exact_generator(lat, s, 4.0);
  EXPECT_NEAR(dirichlet_form(f, lat, s, 4.0, nu), dirichlet_form_matrix(f, gen, nu), 1e-10);

  auto rng = make_rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    double zz = 0.0;
    for (std::size_t st = 0; st < 16; ++st) {
      f[st] = uniform01(rng);
      zz += f[st] * probs[st];
    }
    for (double& v : f) v /= zz;
    const double d = dirichlet_form(f, lat, s, 4.0, nu);
    EXPECT_GE(d, 0.0);
    EXPECT_NEAR(d, dirichlet_form_matrix(f, gen, nu), 1e-10);
  }
  EXPECT_THROW(dirichlet_form(std::vector<double>(16, 2.0), lat, s, 4.0, nu), NormalizationError);
}

TEST(Entropy, Examples) {
  const auto lat = Lattice::torus(4);
  const auto nu = ProductMeasure::invariant(lat, 0.5, 1.0);
  EXPECT_NEAR(relative_entropy(nu.state_probabilities(), nu, lat).entropy, 0.0, 1e-12);
  std::vector<double> point(16, 0.0);
  point[15] = 1.0;
  EXPECT_NEAR(relative_entropy(point, nu, lat).entropy, 4.0 * std::log(2.0), 1e-12);

  const auto l6 = Lattice::torus(6);
  const auto nu6 = ProductMeasure::invariant(l6, 0.3, 0.2);
  auto rng = make_rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> mu(64);
    double z = 0.0;
    for (double& v : mu) z += (v = std::pow(uniform01(rng), 4));
    for (double& v : mu) v /= z;
    const auto b = relative_entropy(mu, nu6, l6);
    EXPECT_TRUE(b.holds()) << b.entropy << " vs " << b.k0 * 6;
  }
  // The bound is attained by the least likely point mass.
  std::vector<double> worst(64, 0.0);
  worst[0b111110] = 1.0;
  const auto b = relative_entropy(worst, nu6, l6);
  EXPECT_NEAR(b.entropy, b.k0 * 6, 1e-12);
}

// Uniformization against a dense matrix exponential.
TEST(EvolveDistribution, MatchesMatrixExponential) {
  const auto lat = Lattice::torus(5);
  const auto s = RateSchedule::slow_site_power(2.0, 1.0);
  const auto gen = exact_generator(lat, s, 5.0);
  const auto dense = gen.dense();
  Eigen::MatrixXd q(32, 32);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) q(i, j) = dense[static_cast<std::size_t>(i * 32 + j)];
  std::vector<double> mu0(32, 0.0);
  mu0[0b00111] = 0.6;
  mu0[0b01010] = 0.4;
  Eigen::RowVectorXd m0(32);
  for (int i = 0; i < 32; ++i) m0(i) = mu0[static_cast<std::size_t>(i)];
  for (double tau : {0.0, 0.3, 2.0, 15.0}) {
    const Eigen::RowVectorXd ref = m0 * (q * tau).exp();
    const auto got = evolve_distribution(mu0, gen, tau);
    for (int i = 0; i < 32; ++i) EXPECT_NEAR(got[static_cast<std::size_t>(i)], ref(i), 1e-11) << "tau " << tau;
  }
  EXPECT_THROW(evolve_distribution(mu0, gen, -1.0), DomainError);
}

// Long-time limit on a connected particle sector is the conditioned invariant law.
TEST(EvolveDistribution, StationaryMeasureIsFixed) {
  const auto lat = Lattice::torus(6);
  const auto s = RateSchedule::slow_site_power(0.5, 1.0);
  const auto gen = exact_generator(lat, s, 6.0);
  const auto nu = ProductMeasure::invariant(lat, 0.4, s, 6.0).state_probabilities();
  const auto out = evolve_distribution(nu, gen, 7.5);
  for (std::size_t i = 0; i < nu.size(); ++i) EXPECT_NEAR(out[i], nu[i], 1e-12);
}
