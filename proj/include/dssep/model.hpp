#pragma once

// Lattices, occupancy configurations and defect rate schedules.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dssep/error.hpp"

namespace dssep {

enum class Geometry { torus, line };

inline const char* to_string(Geometry g) { return g == Geometry::torus ? "torus" : "line"; }

// Finite one-dimensional lattice. Sites carry integer labels: 0..n-1 on the
// torus, -R..R on the line (reflecting ends, no wraparound). Storage indices
// run 0..size()-1 in label order. The defect always sits at label 0.
class Lattice {
 public:
  static Lattice torus(std::size_t n) {
    if (n < 3) throw DomainError("torus needs at least 3 sites, got " + std::to_string(n));
    return Lattice(Geometry::torus, n, 0);
  }

  // Line with sites -radius..radius.
  static Lattice line(std::size_t radius) {
    if (radius < 1) throw DomainError("line radius must be >= 1");
    return Lattice(Geometry::line, 2 * radius + 1, static_cast<long>(radius));
  }

  Geometry geometry() const { return geometry_; }
  std::size_t size() const { return size_; }
  long first_label() const { return -offset_; }
  long last_label() const { return static_cast<long>(size_) - 1 - offset_; }
  std::size_t origin() const { return static_cast<std::size_t>(offset_); }

  bool contains(long x) const {
    if (geometry_ == Geometry::torus) return true;
    return x >= first_label() && x <= last_label();
  }

  // Storage index of a label; torus labels are reduced modulo n.
  std::size_t index(long x) const {
    if (geometry_ == Geometry::torus) {
      const long n = static_cast<long>(size_);
      return static_cast<std::size_t>(((x % n) + n) % n);
    }
    if (!contains(x)) throw DomainError("site " + std::to_string(x) + " outside line lattice");
    return static_cast<std::size_t>(x + offset_);
  }

  long label(std::size_t i) const { return static_cast<long>(i) - offset_; }

  // Neighbour of storage index i in direction dir (+1 or -1), if it exists.
  std::optional<std::size_t> neighbor(std::size_t i, int dir) const {
    if (geometry_ == Geometry::torus) {
      return dir > 0 ? (i + 1) % size_ : (i + size_ - 1) % size_;
    }
    if (dir > 0) return i + 1 < size_ ? std::optional<std::size_t>(i + 1) : std::nullopt;
    return i > 0 ? std::optional<std::size_t>(i - 1) : std::nullopt;
  }

  bool adjacent(long x, long y) const {
    if (!contains(x) || !contains(y)) return false;
    const std::size_t i = index(x), j = index(y);
    return neighbor(i, +1) == j || neighbor(i, -1) == j;
  }

  // Number of nearest-neighbour bonds.
  std::size_t bond_count() const { return geometry_ == Geometry::torus ? size_ : size_ - 1; }

  bool operator==(const Lattice&) const = default;

 private:
  Lattice(Geometry g, std::size_t size, long offset) : geometry_(g), size_(size), offset_(offset) {}

  Geometry geometry_;
  std::size_t size_;
  long offset_;
};

// Occupancy configuration, one bit per site packed into 64-bit words.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  Configuration(std::initializer_list<int> bits) : Configuration(bits.size()) {
    std::size_t i = 0;
    for (int b : bits) set(i++, b != 0);
  }

  static Configuration from_bits(std::span<const int> bits) {
    Configuration c(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) c.set(i, bits[i] != 0);
    return c;
  }

  // Bit i of state gives the occupation of storage index i.
  static Configuration from_state(std::size_t size, std::uint64_t state) {
    if (size > 64) throw CapacityError("from_state supports at most 64 sites");
    Configuration c(size);
    for (std::size_t i = 0; i < size; ++i) c.set(i, ((state >> i) & 1u) != 0);
    return c;
  }

  static Configuration full(std::size_t size) {
    Configuration c(size);
    for (std::size_t i = 0; i < size; ++i) c.set(i, true);
    return c;
  }

  std::size_t size() const { return size_; }
  std::size_t particle_count() const { return count_; }

  bool operator[](std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

  void set(std::size_t i, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    std::uint64_t& w = words_[i >> 6];
    const bool old = (w & mask) != 0;
    if (old == value) return;
    w ^= mask;
    count_ += value ? 1 : -1;
  }

  // In-place exchange of the occupations at i and j.
  void exchange(std::size_t i, std::size_t j) {
    const bool a = (*this)[i], b = (*this)[j];
    if (a == b) return;
    set(i, b);
    set(j, a);
  }

  std::uint64_t state() const {
    if (size_ > 64) throw CapacityError("state() supports at most 64 sites");
    return size_ == 0 ? 0 : words_[0];
  }

  // Sitewise order: every occupied site of *this is occupied in other.
  bool below(const Configuration& other) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      if ((words_[w] & ~other.words_[w]) != 0) return false;
    }
    return true;
  }

  std::vector<int> to_vector() const {
    std::vector<int> v(size_);
    for (std::size_t i = 0; i < size_; ++i) v[i] = (*this)[i] ? 1 : 0;
    return v;
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i) s[i] = (*this)[i] ? '1' : '0';
    return s;
  }

  bool operator==(const Configuration& o) const { return size_ == o.size_ && words_ == o.words_; }

 private:
  std::size_t size_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> words_;
};

// Returns config with the occupations at labels x and y exchanged.
inline Configuration swap(const Configuration& config, const Lattice& lattice, long x, long y) {
  if (!lattice.adjacent(x, y)) {
    throw AdjacencyError("sites " + std::to_string(x) + " and " + std::to_string(y) + " are not adjacent");
  }
  Configuration out = config;
  out.exchange(lattice.index(x), lattice.index(y));
  return out;
}

enum class DefectKind { uniform, slow_site, slow_bonds };

inline const char* to_string(DefectKind k) {
  switch (k) {
    case DefectKind::uniform: return "uniform";
    case DefectKind::slow_site: return "slow_site";
    case DefectKind::slow_bonds: return "slow_bonds";
  }
  return "?";
}

// Defect specification. For a slow site the departure rate from label 0 is
// g(n) and every other site jumps at rate 1. For k slow bonds the bonds
// {0,1},...,{k-1,k} are crossed at rate alpha*n^-beta in both directions.
class RateSchedule {
 public:
  static RateSchedule uniform() {
    RateSchedule s;
    s.kind_ = DefectKind::uniform;
    s.strength_ = [](double) { return 1.0; };
    s.label_ = "uniform";
    return s;
  }

  // g(n) = 1 + c/sqrt(n).
  static RateSchedule slow_site_perturbed(double c = 1.0) {
    auto s = slow_site_perturbed([c](double n) { return c / std::sqrt(n); });
    s.c_ = c;
    std::ostringstream os;
    os << "1+(" << c << ")/sqrt(n)";
    s.label_ = os.str();
    return s;
  }

  // g(n) = 1 + o1(n) for a caller-supplied vanishing sequence.
  static RateSchedule slow_site_perturbed(std::function<double(double)> o1) {
    RateSchedule s;
    s.kind_ = DefectKind::slow_site;
    s.strength_ = [o1 = std::move(o1)](double n) { return 1.0 + o1(n); };
    s.label_ = "1+o(1)";
    return s;
  }

  static RateSchedule slow_site_power(double alpha, double beta) {
    check_power(alpha, beta);
    RateSchedule s;
    s.kind_ = DefectKind::slow_site;
    s.alpha_ = alpha;
    s.beta_ = beta;
    s.power_law_ = true;
    s.strength_ = [alpha, beta](double n) { return alpha * std::pow(n, -beta); };
    std::ostringstream os;
    os << alpha << "*n^-" << beta;
    s.label_ = os.str();
    return s;
  }

  static RateSchedule slow_bonds(int k, double alpha, double beta) {
    if (k < 1) throw DomainError("slow bond count must be positive");
    check_power(alpha, beta);
    RateSchedule s = slow_site_power(alpha, beta);
    s.kind_ = DefectKind::slow_bonds;
    s.k_ = k;
    return s;
  }

  DefectKind kind() const { return kind_; }
  int k() const { return k_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double c() const { return c_; }
  bool power_law() const { return power_law_; }
  const std::string& label() const { return label_; }

  // Defect rate at scale n: g(n) for a slow site, the slow-bond rate otherwise.
  double g(double n) const {
    const double v = strength_(n);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("defect rate must be positive, got " + std::to_string(v) + " at n=" + std::to_string(n));
    }
    return v;
  }

  // Rate of the bond {x, x+1} (labels), for the slow-bond kind.
  double bond_rate(double n, const Lattice& lattice, long x) const {
    if (kind_ != DefectKind::slow_bonds) return 1.0;
    const long lo = normalize(lattice, x);
    return (lo >= 0 && lo < k_) ? g(n) : 1.0;
  }

  // Rate at which a particle at label x attempts the jump to x+dir. Zero
  // when the target is outside the lattice.
  double channel_rate(const Lattice& lattice, double n, long x, int dir) const {
    if (!lattice.contains(x + dir)) return 0.0;
    switch (kind_) {
      case DefectKind::uniform: return 1.0;
      case DefectKind::slow_site: return normalize(lattice, x) == 0 ? g(n) : 1.0;
      case DefectKind::slow_bonds: return bond_rate(n, lattice, dir > 0 ? x : x - 1);
    }
    return 1.0;
  }

 private:
  static void check_power(double alpha, double beta) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    if (!(beta >= 0.0)) throw DomainError("beta must be nonnegative");
  }

  // Canonical label: torus labels are reduced to 0..n-1.
  static long normalize(const Lattice& lattice, long x) {
    return lattice.geometry() == Geometry::torus ? static_cast<long>(lattice.index(x)) : x;
  }

  DefectKind kind_ = DefectKind::uniform;
  std::function<double(double)> strength_;
  double alpha_ = 1.0;
  double beta_ = 0.0;
  double c_ = 0.0;
  int k_ = 1;
  bool power_law_ = false;
  std::string label_;
};

// Rate of the jump x -> x+dir in configuration config.
inline double jump_rate(const RateSchedule& schedule, const Lattice& lattice, double n, long x, int dir,
                        const Configuration& config) {
  if (dir != 1 && dir != -1) throw DomainError("direction must be +1 or -1");
  if (!lattice.contains(x)) throw DomainError("site outside lattice");
  if (!lattice.contains(x + dir)) return 0.0;
  const bool from = config[lattice.index(x)];
  const bool to = config[lattice.index(x + dir)];
  if (!from || to) return 0.0;
  return schedule.channel_rate(lattice, n, x, dir);
}

}  // namespace dssep
