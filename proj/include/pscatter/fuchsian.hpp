// pscatter: orbit length spectrum of a finitely generated Fuchsian group at a
// base point, by breadth-first search over the group ball, plus the packing
// tail bound used to certify truncation errors downstream.
#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "pscatter/common.hpp"
#include "pscatter/hyperbolic.hpp"

namespace pscatter {

struct GroupSpec {
    std::string label;
    HPoint z0;
    std::vector<MoebiusMap> generators;

    void validate() const {
        if (generators.empty())
            throw std::invalid_argument("GroupSpec: at least one generator required");
        for (const auto& g : generators)
            if (g.is_identity(tol::fix_tol))
                throw std::invalid_argument("GroupSpec: identity listed as a generator");
    }
};

struct LengthEntry {
    double length;
    long mult;  // number of group elements gamma with d(gamma z0, z0) at this length
};

struct OrbitSpectrum {
    std::string label;
    HPoint z0;
    double radius = 0.0;        // enumeration cutoff R
    long stabilizer_order = 1;  // |{gamma : gamma z0 = z0}|, identity included
    double tau0 = inf;          // shortest positive length (inf if none within R)
    long element_count = 0;     // total elements counted into `lengths`
    std::vector<LengthEntry> lengths;  // ascending, clustered
};

class enumeration_budget_error : public std::runtime_error {
  public:
    OrbitSpectrum partial;
    explicit enumeration_budget_error(OrbitSpectrum p)
        : std::runtime_error("enumerate_orbit: element budget exceeded"),
          partial(std::move(p)) {}
};

namespace detail {

inline OrbitSpectrum finish_orbit(const GroupSpec& spec, double radius, long stab,
                                  std::vector<double>& raw) {
    OrbitSpectrum out;
    out.label = spec.label;
    out.z0 = spec.z0;
    out.radius = radius;
    out.stabilizer_order = stab;
    std::sort(raw.begin(), raw.end());
    std::size_t i = 0;
    while (i < raw.size()) {
        std::size_t j = i + 1;
        double sum = raw[i];
        while (j < raw.size() && raw[j] - raw[j - 1] <= tol::length_cluster) {
            sum += raw[j];
            ++j;
        }
        out.lengths.push_back({sum / double(j - i), long(j - i)});
        out.element_count += long(j - i);
        i = j;
    }
    if (!out.lengths.empty()) out.tau0 = out.lengths.front().length;
    return out;
}

}  // namespace detail

// Enumerate group elements gamma with d(gamma z0, z0) <= R.  The search
// expands elements out to R + 2*max_generator_displacement so that every
// element within R is reachable, and de-duplicates up to projective sign.
// Lengths within 1e-8 of each other are merged into one multiplicity class.
inline OrbitSpectrum enumerate_orbit(const GroupSpec& spec, double radius,
                                     std::size_t max_elements = 5'000'000) {
    spec.validate();
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("enumerate_orbit: radius must be positive and finite");

    std::vector<MoebiusMap> steps;
    {
        std::unordered_set<MoebiusMap::Key, MoebiusKeyHash> seen;
        for (const auto& g : spec.generators) {
            for (const MoebiusMap& s : {g, g.inverse()}) {
                if (seen.insert(s.key()).second) steps.push_back(s);
            }
        }
    }
    double max_disp = 0.0;
    for (const auto& s : steps) max_disp = std::max(max_disp, displacement(s, spec.z0));
    const double prune_radius = radius + 2.0 * max_disp;

    std::unordered_set<MoebiusMap::Key, MoebiusKeyHash> visited;
    std::deque<MoebiusMap> queue;
    MoebiusMap id;
    visited.insert(id.key());
    queue.push_back(id);

    long stab = 1;  // identity
    std::vector<double> raw;
    while (!queue.empty()) {
        MoebiusMap g = queue.front();
        queue.pop_front();
        for (const auto& s : steps) {
            MoebiusMap h = g.compose(s);
            if (!visited.insert(h.key()).second) continue;
            if (visited.size() > max_elements)
                throw enumeration_budget_error(
                    detail::finish_orbit(spec, radius, stab, raw));
            double d = displacement(h, spec.z0);
            if (d < tol::fix_tol) {
                ++stab;
            } else if (d <= radius) {
                raw.push_back(d);
            }
            if (d <= prune_radius) queue.push_back(h);
        }
    }
    return detail::finish_orbit(spec, radius, stab, raw);
}

// Upper bound on the omitted part of the free-resolvent orbit sum: for
// Im rho = -w the kernel obeys |G(d)| <= A(w,R) e^{-(w+1/2)d} for d > R with
// A = 1/(2 sqrt(pi w (1-e^{-2R}))), and ball packing bounds the element count
// by N(T) <= K e^T with K = m e^{r}/(2(cosh r - 1)), r = tau0/2.  Summation
// by parts then gives the bound below, valid for w > 1/2.
inline double orbit_tail_bound(const OrbitSpectrum& orbit, double w) {
    if (!(w > 0.5))
        throw std::domain_error("orbit_tail_bound: requires w > 1/2");
    if (!std::isfinite(orbit.tau0)) return 0.0;  // finite group: nothing beyond R
    const double R = orbit.radius;
    const double r = 0.5 * orbit.tau0;
    const double A = 1.0 / (2.0 * std::sqrt(pi * w * (1.0 - std::exp(-2.0 * R))));
    const double K =
        double(orbit.stabilizer_order) * std::exp(r) / (2.0 * (std::cosh(r) - 1.0));
    return A * K * ((w + 0.5) / (w - 0.5)) * std::exp((0.5 - w) * R);
}

}  // namespace pscatter
