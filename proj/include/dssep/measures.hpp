#pragma once

// Product measures (invariant and profile-based), sampling, and an exact
// oracle for small lattices: generator matrix over all 2^n states,
// reversibility and stationarity checks, Dirichlet form, relative entropy
// and time evolution of distributions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "dssep/error.hpp"
#include "dssep/model.hpp"
#include "dssep/random.hpp"

namespace dssep {

// m_p(0) = (p/g) / ((1-p) + p/g).
inline double marginal_at_origin(double p, double g) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("density p must lie in (0,1)");
  if (!(g > 0.0)) throw DomainError("rate g must be positive");
  const double r = p / g;
  return r / ((1.0 - p) + r);
}

// Initial density profile gamma on the torus [0,1).
class InitialProfile {
 public:
  static InitialProfile constant(double c) {
    return make("constant:" + fmt(c), [c](double) { return c; });
  }

  // mean + amp*cos(2 pi u); the default is 1/2 + 1/4 cos(2 pi u).
  static InitialProfile cosine(double mean = 0.5, double amp = 0.25) {
    return make("cosine:" + fmt(mean) + ":" + fmt(amp),
                [mean, amp](double u) { return mean + amp * std::cos(2.0 * M_PI * u); });
  }

  // `right` on [0,1/2), `left` on [1/2,1): with the defect at 0 the right
  // side of the origin starts at `right`.
  static InitialProfile step(double right = 0.8, double left = 0.2) {
    return make("step:" + fmt(right) + ":" + fmt(left),
                [right, left](double u) { return u < 0.5 ? right : left; });
  }

  // Linear from a at 0+ to b at 1-.
  static InitialProfile ramp(double a, double b) {
    return make("ramp:" + fmt(a) + ":" + fmt(b), [a, b](double u) { return a + (b - a) * u; });
  }

  // Piecewise constant on len(values) equal cells of [0,1).
  static InitialProfile tabulated(std::vector<double> values) {
    if (values.empty()) throw DomainError("tabulated profile needs values");
    return make("tabulated", [v = std::move(values)](double u) {
      auto i = static_cast<std::size_t>(u * static_cast<double>(v.size()));
      return v[std::min(i, v.size() - 1)];
    });
  }

  // Parses "constant:c", "cosine[:mean:amp]", "step[:right:left]",
  // "ramp:a:b".
  static InitialProfile from_id(const std::string& id) {
    std::vector<std::string> parts;
    std::stringstream ss(id);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.empty()) throw DomainError("empty profile id");
    auto num = [&](std::size_t i) {
      try {
        return std::stod(parts.at(i));
      } catch (const std::exception&) {
        throw DomainError("bad profile id '" + id + "'");
      }
    };
    const std::string& name = parts[0];
    if (name == "constant" && parts.size() == 2) return constant(num(1));
    if (name == "cosine" && parts.size() == 1) return cosine();
    if (name == "cosine" && parts.size() == 3) return cosine(num(1), num(2));
    if (name == "step" && parts.size() == 1) return step();
    if (name == "step" && parts.size() == 3) return step(num(1), num(2));
    if (name == "ramp" && parts.size() == 3) return ramp(num(1), num(2));
    throw DomainError("unknown profile id '" + id + "'");
  }

  double operator()(double u) const {
    u -= std::floor(u);
    return f_(u);
  }
  const std::string& id() const { return id_; }
  double zeta() const { return zeta_; }

 private:
  static std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

  static InitialProfile make(std::string id, std::function<double(double)> f) {
    InitialProfile p;
    p.id_ = std::move(id);
    p.f_ = std::move(f);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 4096; ++i) {
      const double v = p.f_((i + 0.5) / 4096.0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    lo = std::min(lo, p.f_(0.0));
    hi = std::max(hi, p.f_(0.0));
    if (!(lo > 0.0)) throw DomainError("profile " + p.id_ + " must be bounded away from 0");
    if (hi > 1.0) throw DomainError("profile " + p.id_ + " exceeds 1");
    p.zeta_ = lo;
    return p;
  }

  std::string id_;
  std::function<double(double)> f_;
  double zeta_ = 0.0;
};

enum class Provenance { invariant, profile };

class ProductMeasure {
 public:
  // nu_p for defect rate g: Bernoulli(p) off the origin, m_p(0) at the origin.
  static ProductMeasure invariant(const Lattice& lattice, double p, double g) {
    ProductMeasure m;
    m.provenance_ = Provenance::invariant;
    m.p_ = p;
    m.g_ = g;
    m.m_.assign(lattice.size(), p);
    m.m_[lattice.origin()] = marginal_at_origin(p, g);
    return m;
  }

  // nu_p for a schedule evaluated at scale n. For slow bonds the rates are
  // symmetric, so the homogeneous Bernoulli(p) measure is reversible.
  static ProductMeasure invariant(const Lattice& lattice, double p, const RateSchedule& schedule, double n) {
    const double g = schedule.kind() == DefectKind::slow_site ? schedule.g(n) : 1.0;
    return invariant(lattice, p, g);
  }

  // mu_n with marginals gamma(x/n).
  static ProductMeasure from_profile(const Lattice& lattice, const InitialProfile& gamma, double n) {
    ProductMeasure m;
    m.provenance_ = Provenance::profile;
    m.m_.resize(lattice.size());
    for (std::size_t i = 0; i < lattice.size(); ++i) m.m_[i] = gamma(static_cast<double>(lattice.label(i)) / n);
    return m;
  }

  static ProductMeasure from_marginals(std::vector<double> marginals) {
    for (double v : marginals)
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("marginal outside [0,1]");
    ProductMeasure m;
    m.provenance_ = Provenance::profile;
    m.m_ = std::move(marginals);
    return m;
  }

  Provenance provenance() const { return provenance_; }
  std::size_t size() const { return m_.size(); }
  double marginal(std::size_t i) const { return m_[i]; }
  const std::vector<double>& marginals() const { return m_; }

  double p() const {
    require_invariant();
    return p_;
  }
  double g() const {
    require_invariant();
    return g_;
  }
  // chi(p) = p(1-p).
  double chi() const {
    require_invariant();
    return p_ * (1.0 - p_);
  }

  double log_probability(const Configuration& c) const {
    double s = 0.0;
    for (std::size_t i = 0; i < m_.size(); ++i) s += std::log(c[i] ? m_[i] : 1.0 - m_[i]);
    return s;
  }
  double probability(const Configuration& c) const {
    double s = 1.0;
    for (std::size_t i = 0; i < m_.size(); ++i) s *= c[i] ? m_[i] : 1.0 - m_[i];
    return s;
  }

  // Probability of each of the 2^size states, indexed by Configuration::state().
  std::vector<double> state_probabilities() const {
    check_state_cap(m_.size());
    std::vector<double> out(std::size_t{1} << m_.size());
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = probability(Configuration::from_state(m_.size(), s));
    return out;
  }

  static void check_state_cap(std::size_t sites) {
    if (sites > 12) throw CapacityError("exact oracle supports at most 12 sites, got " + std::to_string(sites));
  }

 private:
  void require_invariant() const {
    if (provenance_ != Provenance::invariant) throw ProvenanceError("measure is not an invariant measure");
  }

  Provenance provenance_ = Provenance::profile;
  double p_ = 0.0;
  double g_ = 1.0;
  std::vector<double> m_;
};

// Independent Bernoulli(m(x)) draws. With condition_on_origin the origin is
// forced occupied; for a product measure this is the law of rejection
// sampling on {eta(0) = 1}.
inline Configuration sample(const ProductMeasure& measure, const Lattice& lattice, Rng& rng,
                            bool condition_on_origin = false) {
  if (measure.size() != lattice.size()) throw DomainError("measure size does not match lattice");
  Configuration c(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) c.set(i, uniform01(rng) < measure.marginal(i));
  if (condition_on_origin) {
    if (measure.marginal(lattice.origin()) == 0.0) throw DomainError("cannot condition on a null event");
    c.set(lattice.origin(), true);
  }
  return c;
}

// Sparse generator over all 2^S states (row = from, columns = targets).
struct GeneratorMatrix {
  std::size_t sites = 0;
  std::vector<std::size_t> row_start;  // CSR offsets, size states()+1
  std::vector<std::uint32_t> column;
  std::vector<double> rate;
  std::vector<double> diagonal;  // minus the total exit rate

  std::size_t states() const { return diagonal.size(); }

  double entry(std::size_t from, std::size_t to) const {
    if (from == to) return diagonal[from];
    for (std::size_t k = row_start[from]; k < row_start[from + 1]; ++k)
      if (column[k] == to) return rate[k];
    return 0.0;
  }

  // Row-major dense copy.
  std::vector<double> dense() const {
    const std::size_t s = states();
    std::vector<double> out(s * s, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
      out[i * s + i] = diagonal[i];
      for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) out[i * s + column[k]] += rate[k];
    }
    return out;
  }

  // Row vector times matrix: (mu L)(j) = sum_i mu(i) L(i,j).
  std::vector<double> left_multiply(const std::vector<double>& mu) const {
    std::vector<double> out(states(), 0.0);
    for (std::size_t i = 0; i < states(); ++i) {
      out[i] += mu[i] * diagonal[i];
      for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) out[column[k]] += mu[i] * rate[k];
    }
    return out;
  }

  // (L f)(i) = sum_j L(i,j) f(j).
  std::vector<double> apply(const std::vector<double>& f) const {
    std::vector<double> out(states(), 0.0);
    for (std::size_t i = 0; i < states(); ++i) {
      double s = diagonal[i] * f[i];
      for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) s += rate[k] * f[column[k]];
      out[i] = s;
    }
    return out;
  }
};

// Unaccelerated generator L_n (no n^2 factor); n enters only through g(n).
inline GeneratorMatrix exact_generator(const Lattice& lattice, const RateSchedule& schedule, double n) {
  ProductMeasure::check_state_cap(lattice.size());
  GeneratorMatrix gen;
  gen.sites = lattice.size();
  const std::size_t states = std::size_t{1} << lattice.size();
  gen.row_start.reserve(states + 1);
  gen.diagonal.assign(states, 0.0);
  gen.row_start.push_back(0);
  for (std::size_t s = 0; s < states; ++s) {
    double exit = 0.0;
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      if (!((s >> i) & 1u)) continue;
      for (int d : {-1, +1}) {
        const auto j = lattice.neighbor(i, d);
        if (!j || ((s >> *j) & 1u)) continue;
        const double r = schedule.channel_rate(lattice, n, lattice.label(i), d);
        if (r == 0.0) continue;
        const std::size_t t = s ^ (std::size_t{1} << i) ^ (std::size_t{1} << *j);
        gen.column.push_back(static_cast<std::uint32_t>(t));
        gen.rate.push_back(r);
        exit += r;
      }
    }
    gen.diagonal[s] = -exit;
    gen.row_start.push_back(gen.column.size());
  }
  return gen;
}

// max |nu(a) r(a,b) - nu(b) r(b,a)| over transitions.
inline double verify_detailed_balance(const ProductMeasure& measure, const GeneratorMatrix& gen) {
  const auto nu = measure.state_probabilities();
  double worst = 0.0;
  for (std::size_t a = 0; a < gen.states(); ++a) {
    for (std::size_t k = gen.row_start[a]; k < gen.row_start[a + 1]; ++k) {
      const std::size_t b = gen.column[k];
      worst = std::max(worst, std::abs(nu[a] * gen.rate[k] - nu[b] * gen.entry(b, a)));
    }
  }
  return worst;
}

// max_j |(nu L)(j)|.
inline double stationarity_residual(const ProductMeasure& measure, const GeneratorMatrix& gen) {
  const auto r = gen.left_multiply(measure.state_probabilities());
  double worst = 0.0;
  for (double v : r) worst = std::max(worst, std::abs(v));
  return worst;
}

namespace detail {
inline void check_density(const std::vector<double>& f, const std::vector<double>& nu) {
  if (f.size() != nu.size()) throw NormalizationError("density has wrong length");
  double total = 0.0;
  for (std::size_t s = 0; s < f.size(); ++s) {
    if (!(f[s] >= 0.0)) throw NormalizationError("density must be nonnegative");
    total += f[s] * nu[s];
  }
  if (std::abs(total - 1.0) > 1e-9) throw NormalizationError("density does not integrate to 1 under nu_p");
}
}  // namespace detail

// Dirichlet form of sqrt(f) as a bond sum:
//   1/2 sum_eta nu(eta) sum_bonds [r_{x->x+1} eta(x)(1-eta(x+1))
//       + r_{x+1->x} eta(x+1)(1-eta(x))] (sqrt f(eta^{x,x+1}) - sqrt f(eta))^2.
// Around a slow site this is the five-term expression; bulk bonds carry rate
// 1 in both directions.
inline double dirichlet_form(const std::vector<double>& f, const Lattice& lattice, const RateSchedule& schedule,
                             double n, const ProductMeasure& measure) {
  const auto nu = measure.state_probabilities();
  detail::check_density(f, nu);
  double total = 0.0;
  for (std::size_t s = 0; s < nu.size(); ++s) {
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      const auto j = lattice.neighbor(i, +1);
      if (!j) continue;
      const bool a = (s >> i) & 1u, b = (s >> *j) & 1u;
      if (a == b) continue;
      const long x = lattice.label(i);
      const double r = a ? schedule.channel_rate(lattice, n, x, +1) : schedule.channel_rate(lattice, n, x + 1, -1);
      const std::size_t t = s ^ (std::size_t{1} << i) ^ (std::size_t{1} << *j);
      const double d = std::sqrt(f[t]) - std::sqrt(f[s]);
      total += 0.5 * nu[s] * r * d * d;
    }
  }
  return total;
}

// -<sqrt f, L sqrt f>_nu from the matrix.
inline double dirichlet_form_matrix(const std::vector<double>& f, const GeneratorMatrix& gen,
                                    const ProductMeasure& measure) {
  const auto nu = measure.state_probabilities();
  detail::check_density(f, nu);
  std::vector<double> root(f.size());
  for (std::size_t s = 0; s < f.size(); ++s) root[s] = std::sqrt(f[s]);
  const auto lr = gen.apply(root);
  double total = 0.0;
  for (std::size_t s = 0; s < f.size(); ++s) total -= nu[s] * root[s] * lr[s];
  return total;
}

struct EntropyBound {
  double entropy = 0.0;
  double k0 = 0.0;  // from nu_p(eta) >= (p ^ (1-p))^{n-1} (m0 ^ (1-m0))
  std::size_t n = 0;
  bool holds() const { return entropy <= k0 * static_cast<double>(n); }
};

inline double entropy_constant(std::size_t n, double p, double m0) {
  return (-(static_cast<double>(n) - 1.0) * std::log(std::min(p, 1.0 - p)) - std::log(std::min(m0, 1.0 - m0))) /
         static_cast<double>(n);
}

// H(mu | nu) = sum mu log(mu / nu), and the constant K0 when nu is invariant.
inline EntropyBound relative_entropy(const std::vector<double>& mu, const ProductMeasure& nu, const Lattice& lattice) {
  ProductMeasure::check_state_cap(nu.size());
  const std::size_t states = std::size_t{1} << nu.size();
  if (mu.size() != states) throw NormalizationError("mu has wrong length");
  double total = 0.0, h = 0.0;
  for (std::size_t s = 0; s < states; ++s) {
    if (mu[s] < 0.0) throw NormalizationError("mu must be nonnegative");
    total += mu[s];
    if (mu[s] == 0.0) continue;
    const double lq = nu.log_probability(Configuration::from_state(nu.size(), s));
    if (!std::isfinite(lq)) throw AbsoluteContinuityError("mu charges a state with nu = 0");
    h += mu[s] * (std::log(mu[s]) - lq);
  }
  if (std::abs(total - 1.0) > 1e-9) throw NormalizationError("mu is not a probability vector");
  EntropyBound out;
  out.entropy = h;
  out.n = nu.size();
  if (nu.provenance() == Provenance::invariant)
    out.k0 = entropy_constant(nu.size(), nu.p(), nu.marginal(lattice.origin()));
  return out;
}

// mu exp(tau L) by uniformization; tau is microscopic time.
inline std::vector<double> evolve_distribution(const std::vector<double>& mu0, const GeneratorMatrix& gen, double tau,
                                               double tol = 1e-15) {
  if (tau < 0.0) throw DomainError("negative evolution time");
  double lambda = 0.0;
  for (double d : gen.diagonal) lambda = std::max(lambda, -d);
  if (lambda == 0.0 || tau == 0.0) return mu0;
  const std::size_t s = gen.states();
  const double a = lambda * tau;
  // Poisson(a) weights are accumulated in log space so large a does not underflow.
  std::vector<double> term = mu0, out(s, 0.0), next(s);
  double mass = 0.0;
  for (std::size_t k = 0;; ++k) {
    const double w = std::exp(-a + static_cast<double>(k) * std::log(a) - std::lgamma(static_cast<double>(k) + 1.0));
    for (std::size_t i = 0; i < s; ++i) out[i] += w * term[i];
    mass += w;
    if (static_cast<double>(k) > a && 1.0 - mass < tol) break;
    if (k > 100000 + static_cast<std::size_t>(10 * a)) break;
    // term <- term (I + L / lambda)
    const auto lt = gen.left_multiply(term);
    for (std::size_t i = 0; i < s; ++i) next[i] = term[i] + lt[i] / lambda;
    term.swap(next);
  }
  return out;
}

}  // namespace dssep
