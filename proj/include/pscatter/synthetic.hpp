// pscatter: reproducible synthetic eigenvalue data following the Weyl law on
// average: unit-area-normalized counting N(lambda) ~ (area/4pi) lambda, with
// exponential gaps and weights whose means match the local averages
//   sum_j w_j m_j over [lambda, lambda + L] ~ L/(4 pi).
#pragma once

#include <cmath>
#include <stdexcept>

#include "pscatter/common.hpp"
#include "pscatter/spectral.hpp"

namespace pscatter {

struct SyntheticOptions {
    double area = 4.0 * pi;
    long count = 200;           // entries after lambda_0 = 0
    double mult2_prob = 0.0;    // probability an entry carries multiplicity 2
    double zero_weight_prob = 0.0;  // probability an entry is invisible at z0
    double min_gap_factor = 1e-4;   // floor on gaps, in units of the mean gap
};

// Draw a spectrum from the seed.  Entry 0 is the constant mode
// (lambda = 0, weight 1/area); subsequent gaps are exponential with mean
// 4 pi / area and weights exponential with mean 1/area (halved per unit of
// multiplicity so the local Weyl density is preserved).
inline Spectrum make_weyl_spectrum(std::uint64_t seed, const SyntheticOptions& opt = {}) {
    if (!(opt.area > 0.0) || opt.count < 1)
        throw std::invalid_argument("make_weyl_spectrum: need positive area and count");
    Rng rng(seed);
    Spectrum spec;
    spec.area = opt.area;
    spec.entries.push_back({0.0, 1, 1.0 / opt.area});
    const double mean_gap = 4.0 * pi / opt.area;
    double lambda = 0.0;
    for (long k = 0; k < opt.count; ++k) {
        double gap = rng.exponential(mean_gap);
        gap = std::max(gap, opt.min_gap_factor * mean_gap);
        lambda += gap;
        long mult = rng.uniform() < opt.mult2_prob ? 2 : 1;
        double w;
        if (rng.uniform() < opt.zero_weight_prob) {
            w = 0.0;
        } else {
            w = rng.exponential(1.0 / opt.area) / double(mult);
            w = std::max(w, 1e-12 / opt.area);
        }
        spec.entries.push_back({lambda, mult, w});
    }
    spec.validate();
    return spec;
}

}  // namespace pscatter
