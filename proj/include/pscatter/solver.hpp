// pscatter: perturbed eigenvalues as zeros of the spectral-form S.  S is
// strictly increasing between consecutive poles (eigenvalues seen by z0), so
// each inter-pole interval holds exactly one zero and the new spectrum
// interlaces the old one.  Invisible and multiple eigenvalues survive.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pscatter/common.hpp"
#include "pscatter/spectral.hpp"

namespace pscatter {

struct NewEig {
    double lambda;
    double bracket_lo, bracket_hi;  // the pole pair that pinched it
    bool is_ground;                 // found below the lowest visible pole
};

struct PerturbedSpectrum {
    std::vector<NewEig> new_eigs;          // ascending
    std::vector<SpectrumEntry> inherited;  // invisible entries + reduced multiples
    bool ground_found = false;
    double lambda_max = 0.0;
    std::vector<std::string> warnings;
};

struct SolverOptions {
    double safety_factor = 4.0;  // data must extend this far beyond lambda_max
    double tol_lambda = tol::bisect_tol;
};

namespace detail {

// Visible poles: distinct eigenvalues with positive weight.
inline std::vector<SpectrumEntry> visible_poles(const Spectrum& spec) {
    std::vector<SpectrumEntry> p;
    for (const auto& e : spec.entries)
        if (e.weight > 0.0) p.push_back(e);
    return p;
}

// Nudge an endpoint off its pole until S has the sign the interlacing
// argument demands (negative just right of a pole, positive just left).
inline bool settle_endpoint(const CouplingContext& ctx, const Spectrum& spec, double pole,
                            double gap, int dir, double& x_out) {
    double delta = 1e-3 * gap;
    for (int attempt = 0; attempt < 14; ++attempt) {
        const double x = pole + dir * delta;
        const double s = s_spectral_raw(ctx, spec, x);
        if ((dir > 0 && s < 0.0) || (dir < 0 && s > 0.0)) {
            x_out = x;
            return true;
        }
        delta /= 8.0;
    }
    return false;
}

inline double bisect_lambda(const CouplingContext& ctx, const Spectrum& spec, double lo,
                            double hi, double tol_lambda) {
    // invariant: S(lo) < 0 < S(hi), S increasing
    while (hi - lo > tol_lambda * std::max({1.0, std::abs(lo), std::abs(hi)})) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (s_spectral_raw(ctx, spec, mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Solve for all zeros of S(lambda) below lambda_max.  Preconditions: the
// spectrum must extend safety_factor times beyond lambda_max so the omitted
// tail cannot displace the bracketed roots.
inline PerturbedSpectrum solve_new_eigs(const CouplingContext& ctx, const Spectrum& spec,
                                        double lambda_max, const SolverOptions& opt = {}) {
    spec.validate();
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max))
        throw std::invalid_argument("solve_new_eigs: lambda_max must be positive and finite");
    if (spec.lambda_top() < opt.safety_factor * lambda_max)
        throw std::invalid_argument(
            "solve_new_eigs: spectrum reaches only " + fmt_g17(spec.lambda_top()) +
            ", need " + fmt_g17(opt.safety_factor * lambda_max) + " beyond lambda_max");
    if (!std::isfinite(ctx.alpha_inv))
        throw std::invalid_argument("solve_new_eigs: context has no finite 1/alpha");

    PerturbedSpectrum out;
    out.lambda_max = lambda_max;
    for (const auto& e : spec.entries) {
        if (e.weight == 0.0)
            out.inherited.push_back(e);  // invisible at z0: untouched, full multiplicity
        else if (e.mult > 1)
            out.inherited.push_back({e.lambda, e.mult - 1, e.weight});
    }

    const auto poles = detail::visible_poles(spec);
    if (poles.empty()) {
        out.warnings.push_back("no visible eigenvalues: nothing to perturb");
        return out;
    }

    // ground state: expand the bracket downward by powers of two
    {
        const double p1 = poles.front().lambda;
        double a = -1.0;
        bool found = false;
        for (int k = 0; k <= tol::bracket_expand_max; ++k) {
            if (s_spectral_raw(ctx, spec, a) < 0.0) {
                found = true;
                break;
            }
            a *= 2.0;
        }
        if (found) {
            const double gap = p1 - a;
            double b;
            if (detail::settle_endpoint(ctx, spec, p1, gap, -1, b)) {
                const double z = detail::bisect_lambda(ctx, spec, a, b, opt.tol_lambda);
                out.new_eigs.push_back({z, -inf, p1, true});
                out.ground_found = true;
            } else {
                out.warnings.push_back("ground bracket degenerate near lambda = " + fmt_g17(p1));
            }
        } else {
            out.warnings.push_back("no ground state within the bisection range");
        }
    }

    // one zero strictly between each pair of consecutive visible poles
    for (std::size_t i = 0; i + 1 < poles.size(); ++i) {
        const double pl = poles[i].lambda, pr = poles[i + 1].lambda;
        if (pl > lambda_max) break;
        const double gap = pr - pl;
        double a, b;
        if (!detail::settle_endpoint(ctx, spec, pl, gap, +1, a) ||
            !detail::settle_endpoint(ctx, spec, pr, gap, -1, b) || !(a < b)) {
            out.warnings.push_back("bracket degenerate in (" + fmt_g17(pl) + ", " +
                                   fmt_g17(pr) + ")");
            continue;
        }
        const double z = detail::bisect_lambda(ctx, spec, a, b, opt.tol_lambda);
        if (z <= lambda_max) out.new_eigs.push_back({z, pl, pr, false});
    }

    // The unbounded gap above the top visible pole holds one more zero when
    // the limit S(+inf) = 1/alpha - sum w m lambda_j / (lambda_j^2 + 1) is
    // positive.  For a spectrum truncated from an infinite one the top pole
    // sits far beyond lambda_max (the safety factor guarantees it) and the
    // zero is discarded with the rest; for a complete finite model the zero
    // is genuine and reported like any other.
    if (poles.back().lambda <= lambda_max) {
        CompensatedSum lim;
        lim.add(ctx.alpha_inv);
        for (const auto& e : spec.entries)
            lim.add(-e.weight * double(e.mult) * e.lambda / (e.lambda * e.lambda + 1.0));
        const double s_inf = lim.result();
        const double top = poles.back().lambda;
        const double gap = poles.size() >= 2 ? top - poles[poles.size() - 2].lambda
                                             : std::max(1.0, std::abs(top));
        double a;
        if (s_inf > 0.0 && detail::settle_endpoint(ctx, spec, top, gap, +1, a)) {
            double b = top + gap;
            bool found = false;
            for (int k = 0; k <= tol::bracket_expand_max; ++k) {
                if (s_spectral_raw(ctx, spec, b) > 0.0) {
                    found = true;
                    break;
                }
                b = top + 2.0 * (b - top);
            }
            if (found) {
                const double z = detail::bisect_lambda(ctx, spec, a, b, opt.tol_lambda);
                if (z <= lambda_max) out.new_eigs.push_back({z, top, inf, false});
            } else {
                out.warnings.push_back("top bracket not closed above lambda = " + fmt_g17(top));
            }
        }
    }
    return out;
}

// Indices i (into the visible-pole list) whose gap to the next visible pole
// is at least c; default c = 2 pi / area, half the mean Weyl gap.
inline std::vector<std::size_t> gap_subsequence(const Spectrum& spec, double c) {
    const auto poles = detail::visible_poles(spec);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i + 1 < poles.size(); ++i)
        if (poles[i + 1].lambda - poles[i].lambda >= c) idx.push_back(i);
    return idx;
}

struct SafeHeight {
    double T;          // height on the real rho axis
    double clearance;  // distance to the nearest pole or zero rho
    double gap_rho;    // rho gap of the pole pair it sits in
};

// Heights T that stay a quarter rho-gap away from every pole and zero, one
// per sufficiently wide gap: T is the midpoint between the zero chi inside
// the gap and the farther of the two flanking poles.
inline std::vector<SafeHeight> safe_heights(const Spectrum& spec,
                                            const PerturbedSpectrum& pert, double c) {
    const auto poles = detail::visible_poles(spec);
    std::vector<double> pole_rho, zero_rho;
    for (const auto& p : poles)
        if (p.lambda > 0.25) pole_rho.push_back(std::sqrt(p.lambda - 0.25));
    for (const auto& z : pert.new_eigs)
        if (z.lambda > 0.25) zero_rho.push_back(std::sqrt(z.lambda - 0.25));

    std::vector<SafeHeight> out;
    for (std::size_t i : gap_subsequence(spec, c)) {
        const double pl = poles[i].lambda, pr = poles[i + 1].lambda;
        if (pl <= 0.25) continue;
        if (pr > pert.lambda_max) continue;  // zero possibly unsolved out there
        // the zero inside (pl, pr)
        const NewEig* chi = nullptr;
        for (const auto& z : pert.new_eigs)
            if (z.lambda > pl && z.lambda < pr) chi = &z;
        if (!chi) continue;
        const double rl = std::sqrt(pl - 0.25), rr = std::sqrt(pr - 0.25);
        const double rc = std::sqrt(chi->lambda - 0.25);
        const double T = (rc - rl >= rr - rc) ? 0.5 * (rl + rc) : 0.5 * (rc + rr);
        double clear = inf;
        for (double r : pole_rho) clear = std::min(clear, std::abs(r - T));
        for (double r : zero_rho) clear = std::min(clear, std::abs(r - T));
        out.push_back({T, clear, rr - rl});
    }
    return out;
}

// Crude polynomial-in-T control of the resolvent differences along the
// vertical segment rho = T + i y, y in [-sigma, 0]: returns
//   max_y sum_j w_j m_j |1/(lambda_j - mu(y)) - 1/(lambda_j - i)| / T^5.
inline double polybound_diagnostic(const Spectrum& spec, double T, double sigma,
                                   int nsamples = 33) {
    if (!(T > 1.0)) throw std::invalid_argument("polybound_diagnostic: T must exceed 1");
    double worst = 0.0;
    for (int k = 0; k < nsamples; ++k) {
        const double y = -sigma * double(k) / double(nsamples - 1);
        const cplx mu = 0.25 + cplx(T, y) * cplx(T, y);
        CompensatedSum acc;
        for (const auto& e : spec.entries) {
            const double wm = e.weight * double(e.mult);
            if (wm == 0.0) continue;
            acc.add(wm * std::abs(1.0 / (e.lambda - mu) - 1.0 / (e.lambda - cplx(0.0, 1.0))));
        }
        worst = std::max(worst, acc.result());
    }
    return worst / std::pow(T, 5);
}

}  // namespace pscatter
