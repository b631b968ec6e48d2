#pragma once

// Empirical density profiles against PDE solutions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dssep/error.hpp"
#include "dssep/model.hpp"
#include "dssep/pde.hpp"

namespace dssep::harness {

struct ProfileDistance {
  double l1 = 0.0;
  double linf = 0.0;
  std::size_t window = 0;
  std::size_t sites = 0;
};

struct ComparedSite {
  std::size_t index;  // torus label
  double u;           // position handed to the PDE interpolation
};

// Sites entering the comparison, in order along the circle. Without a
// defect the circle is kept whole. A slow site is excluded and the circle is
// cut there. For k slow bonds the sites 1..k-1 inside the slow region are
// excluded, and site 0 is read as the left limit 0- at u = 1.
inline std::vector<ComparedSite> compared_sites(std::size_t n, const RateSchedule& schedule, bool& circular) {
  std::vector<ComparedSite> out;
  const double nn = static_cast<double>(n);
  const bool perturbed = schedule.kind() == DefectKind::slow_site && !schedule.power_law();
  circular = schedule.kind() == DefectKind::uniform || perturbed;
  if (circular) {
    for (std::size_t x = 0; x < n; ++x) out.push_back({x, x / nn});
  } else if (schedule.kind() == DefectKind::slow_site) {
    for (std::size_t x = 1; x < n; ++x) out.push_back({x, x / nn});
  } else {
    for (std::size_t x = static_cast<std::size_t>(schedule.k()); x < n; ++x) out.push_back({x, x / nn});
    out.push_back({0, 1.0});
  }
  return out;
}

// Moving average over `window` sites centred at each compared site; on a cut
// circle the window shrinks symmetrically near the ends so it never crosses
// the defect.
inline std::vector<double> mollify(const std::vector<double>& values, std::size_t window, bool circular) {
  const std::size_t len = values.size();
  const long half = static_cast<long>(window / 2);
  std::vector<double> out(len);
  for (std::size_t j = 0; j < len; ++j) {
    long h = half;
    if (!circular) h = std::min<long>({h, static_cast<long>(j), static_cast<long>(len - 1 - j)});
    double s = 0.0;
    for (long d = -h; d <= h; ++d) {
      long i = static_cast<long>(j) + d;
      if (circular) i = ((i % static_cast<long>(len)) + static_cast<long>(len)) % static_cast<long>(len);
      s += values[static_cast<std::size_t>(i)];
    }
    out[j] = s / static_cast<double>(2 * h + 1);
  }
  return out;
}

// L1 (mean absolute difference over compared sites, approximating the
// integral over [0,1]) and Linf distance between the mollified empirical
// density, indexed by torus label, and rho(t, x/n).
inline ProfileDistance compare_profiles(const std::vector<double>& density, const RateSchedule& schedule,
                                        const PdeSolution& pde, double t, std::size_t window) {
  const std::size_t n = density.size();
  if (n < 3) throw DomainError("density profile too short");
  const std::size_t j = pde.time_index(t);
  bool circular = false;
  const auto sites = compared_sites(n, schedule, circular);
  std::vector<double> raw;
  raw.reserve(sites.size());
  for (const auto& s : sites) raw.push_back(density[s.index]);
  const auto smooth = mollify(raw, std::max<std::size_t>(window, 1), circular);
  ProfileDistance d;
  d.window = window;
  d.sites = sites.size();
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double e = std::abs(smooth[i] - pde.at(j, sites[i].u));
    d.l1 += e;
    d.linf = std::max(d.linf, e);
  }
  d.l1 /= static_cast<double>(sites.size());
  return d;
}

}  // namespace dssep::harness
