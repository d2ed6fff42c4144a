// pscatter: spectral data model and the two faces of the scattering function
//   S(s)      = 1/beta + m psi(s) + sum_orbit G_s           (geometric form)
//   S(lambda) = 1/alpha + sum_j w_j m_j (1 + lambda_j lambda)
//                          / ((lambda_j - lambda)(lambda_j^2 + 1))   (spectral form)
// together with the coupling context tying alpha, beta and the regularized
// constant c0 together.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "pscatter/common.hpp"
#include "pscatter/green.hpp"
#include "pscatter/special.hpp"

namespace pscatter {

struct SpectrumEntry {
    double lambda;
    long mult;
    double weight;  // |phi_j(z0)|^2 averaged over the eigenspace
};

struct Spectrum {
    double area = 0.0;
    std::vector<SpectrumEntry> entries;

    void validate() const {
        if (!(area > 0.0) || !std::isfinite(area))
            throw std::invalid_argument("Spectrum: area must be positive and finite");
        if (entries.empty()) throw std::invalid_argument("Spectrum: no entries");
        double prev = -inf;
        for (const auto& e : entries) {
            if (!std::isfinite(e.lambda) || e.lambda < 0.0)
                throw std::invalid_argument("Spectrum: eigenvalues must be finite and >= 0");
            if (e.lambda <= prev)
                throw std::invalid_argument("Spectrum: eigenvalues must be strictly increasing");
            if (e.mult < 1) throw std::invalid_argument("Spectrum: multiplicity must be >= 1");
            if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
                throw std::invalid_argument("Spectrum: weights must be finite and >= 0");
            prev = e.lambda;
        }
    }
    double lambda_top() const { return entries.back().lambda; }
};

// rho = sqrt(lambda - 1/4), principal branch (real for lambda >= 1/4,
// positive imaginary below).
inline cplx rho_of_lambda(cplx lambda) { return std::sqrt(lambda - 0.25); }
inline cplx rho_of_lambda(double lambda) {
    return lambda >= 0.25 ? cplx(std::sqrt(lambda - 0.25), 0.0)
                          : cplx(0.0, std::sqrt(0.25 - lambda));
}

enum class BetaConvention { derivation, theorem1 };

inline std::string to_string(BetaConvention c) {
    return c == BetaConvention::derivation ? "derivation" : "theorem1";
}
inline BetaConvention beta_convention_from_string(const std::string& s) {
    if (s == "derivation") return BetaConvention::derivation;
    if (s == "theorem1") return BetaConvention::theorem1;
    throw std::invalid_argument("unknown beta convention: " + s);
}

// Spectral parameter t with t(1-t) = i and Re t > 1/2, the reference point
// where the orbit sum converges and c0 is extracted.
inline cplx reference_t() { return 0.5 * (1.0 + std::sqrt(cplx(1.0, -4.0))); }

struct CouplingContext {
    double alpha = 0.0;      // boundary-condition parameter, may be +-inf
    double alpha_inv = 0.0;  // 1/alpha, or the value reconstructed from beta
    double beta = 0.0;       // renormalized coupling
    double c0 = 0.0;         // m Re psi(t) + Re sum_orbit G_t
    double c0_tail = 0.0;    // truncation bound carried by c0
    long m = 1;              // stabilizer order of z0
    BetaConvention convention = BetaConvention::derivation;
};

namespace detail {

inline double c0_of_orbit(long m, const OrbitSpectrum* orbit, double* tail_out) {
    const cplx t = reference_t();
    double c0 = double(m) * psi(t).real();
    double tail = 0.0;
    if (orbit) {
        auto gs = green_sum(*orbit, cplx(t.imag(), 0.5 - t.real()));
        c0 += gs.value.real();
        tail = gs.tail;
    }
    if (tail_out) *tail_out = tail;
    return c0;
}

}  // namespace detail

// Build the context from the physical parameter alpha.  The orbit must be
// enumerated far enough that the c0 truncation bound is negligible, since
// beta inherits any error in c0.
inline CouplingContext make_context(double alpha, long m, const OrbitSpectrum* orbit,
                                    BetaConvention conv = BetaConvention::derivation,
                                    double c0_tail_tol = tol::c0_tail_tol) {
    if (m < 1) throw std::invalid_argument("make_context: stabilizer order must be >= 1");
    if (std::isnan(alpha)) throw std::invalid_argument("make_context: alpha is NaN");
    CouplingContext ctx;
    ctx.m = m;
    ctx.convention = conv;
    ctx.c0 = detail::c0_of_orbit(m, orbit, &ctx.c0_tail);
    if (ctx.c0_tail > c0_tail_tol)
        throw std::invalid_argument(
            "make_context: orbit truncation leaves c0 uncertain by " +
            fmt_g17(ctx.c0_tail) + "; enlarge the enumeration radius");
    ctx.alpha = alpha;
    const double sgn = conv == BetaConvention::derivation ? 1.0 : -1.0;
    if (std::isinf(alpha)) {
        // 1/alpha = 0: beta = +-1/c0 depending on the convention
        if (ctx.c0 == 0.0)
            throw std::invalid_argument("make_context: c0 = 0 makes beta singular at alpha = inf");
        ctx.alpha_inv = 0.0;
        ctx.beta = sgn / ctx.c0;
    } else {
        // derivation: beta = alpha/(1 - c0 alpha); theorem1: beta = alpha/(1 + c0 alpha)
        if (ctx.c0 != 0.0) {
            const double alpha_sing = sgn / ctx.c0;
            if (std::abs(alpha - alpha_sing) <=
                tol::singular_coupling * std::max(1.0, std::abs(alpha_sing)))
                throw std::invalid_argument("make_context: alpha lies at the singular coupling " +
                                            fmt_g17(alpha_sing));
        }
        ctx.alpha_inv = alpha == 0.0 ? inf : 1.0 / alpha;
        ctx.beta = alpha / (1.0 - sgn * ctx.c0 * alpha);
    }
    return ctx;
}

// Build the context from beta directly.  This sidesteps the c0 truncation
// requirement: the geometric side is parametrized by beta alone, and alpha
// is reconstructed (with the c0 estimate) only for the spectral form.
inline CouplingContext make_context_beta(double beta, long m,
                                         const OrbitSpectrum* orbit = nullptr,
                                         BetaConvention conv = BetaConvention::derivation) {
    if (m < 1) throw std::invalid_argument("make_context_beta: stabilizer order must be >= 1");
    if (beta == 0.0 || !std::isfinite(beta))
        throw std::invalid_argument("make_context_beta: beta must be finite and nonzero");
    CouplingContext ctx;
    ctx.m = m;
    ctx.convention = conv;
    ctx.beta = beta;
    ctx.c0 = detail::c0_of_orbit(m, orbit, &ctx.c0_tail);
    const double sgn = conv == BetaConvention::derivation ? 1.0 : -1.0;
    ctx.alpha_inv = 1.0 / beta + sgn * ctx.c0;
    ctx.alpha = ctx.alpha_inv == 0.0 ? inf : 1.0 / ctx.alpha_inv;
    return ctx;
}

// ---- spectral form ---------------------------------------------------------

// Estimated size of the omitted eigenvalue tail at evaluation point z.  This
// is a Weyl-density heuristic for reporting, not a certified bound.
inline double spectral_tail_estimate(const Spectrum& spec, double abs_lambda) {
    const double top = spec.lambda_top();
    return (abs_lambda / (top * top) + 0.5 / top) / pi;
}

namespace detail {

inline void pole_guard(const Spectrum& spec, cplx lambda) {
    const cplx rho = rho_of_lambda(lambda);
    for (const auto& e : spec.entries) {
        if (e.weight <= 0.0) continue;
        const cplx rj = rho_of_lambda(e.lambda);
        const double scale = std::max(1.0, std::abs(rj));
        if (std::abs(rho - rj) < tol::pole_tol * scale ||
            std::abs(rho + rj) < tol::pole_tol * scale)
            throw std::domain_error("spectral evaluation within pole tolerance of lambda = " +
                                    fmt_g17(e.lambda));
    }
}

}  // namespace detail

// Unguarded evaluation core; used by the eigenvalue solver whose brackets are
// managed explicitly.  No tail estimate attached.
inline cplx s_spectral_raw(const CouplingContext& ctx, const Spectrum& spec, cplx lambda) {
    if (!std::isfinite(ctx.alpha_inv))
        throw std::domain_error("s_spectral: 1/alpha is not finite (beta = 0 context?)");
    CompensatedSumC acc;
    for (const auto& e : spec.entries) {
        const double wm = e.weight * double(e.mult);
        if (wm == 0.0) continue;
        acc.add(wm * (1.0 + e.lambda * lambda) /
                ((e.lambda - lambda) * (e.lambda * e.lambda + 1.0)));
    }
    return ctx.alpha_inv + acc.result();
}

inline double s_spectral_raw(const CouplingContext& ctx, const Spectrum& spec, double lambda) {
    if (!std::isfinite(ctx.alpha_inv))
        throw std::domain_error("s_spectral: 1/alpha is not finite (beta = 0 context?)");
    CompensatedSum acc;
    for (const auto& e : spec.entries) {
        const double wm = e.weight * double(e.mult);
        if (wm == 0.0) continue;
        acc.add(wm * (1.0 + e.lambda * lambda) /
                ((e.lambda - lambda) * (e.lambda * e.lambda + 1.0)));
    }
    return ctx.alpha_inv + acc.result();
}

// d/dlambda of the spectral form: sum w m / (lambda_j - lambda)^2.
inline cplx s_prime_spectral_raw(const Spectrum& spec, cplx lambda) {
    CompensatedSumC acc;
    for (const auto& e : spec.entries) {
        const double wm = e.weight * double(e.mult);
        if (wm == 0.0) continue;
        const cplx d = e.lambda - lambda;
        acc.add(wm / (d * d));
    }
    return acc.result();
}

inline double s_prime_spectral_raw(const Spectrum& spec, double lambda) {
    CompensatedSum acc;
    for (const auto& e : spec.entries) {
        const double wm = e.weight * double(e.mult);
        if (wm == 0.0) continue;
        const double d = e.lambda - lambda;
        acc.add(wm / (d * d));
    }
    return acc.result();
}

// Guarded evaluation with a tail estimate, for user-facing paths.
inline ValueWithTail<cplx> s_spectral(const CouplingContext& ctx, const Spectrum& spec,
                                      cplx lambda) {
    detail::pole_guard(spec, lambda);
    return {s_spectral_raw(ctx, spec, lambda), spectral_tail_estimate(spec, std::abs(lambda))};
}

// Evaluation in the rho variable: lambda = 1/4 + rho^2.
inline ValueWithTail<cplx> s_spectral_rho(const CouplingContext& ctx, const Spectrum& spec,
                                          cplx rho) {
    return s_spectral(ctx, spec, 0.25 + rho * rho);
}

// dS/drho = 2 rho dS/dlambda.
inline cplx s_prime_spectral_rho_raw(const Spectrum& spec, cplx rho) {
    return 2.0 * rho * s_prime_spectral_raw(spec, 0.25 + rho * rho);
}

// ---- geometric form --------------------------------------------------------

// S(s) from the orbit data: 1/beta + m psi(s) + sum over the truncated orbit,
// with the truncation bound attached.  Requires Re s > 1/2 + margin so the
// orbit sum converges (enforced by the kernel itself).
inline ValueWithTail<cplx> s_geometric(const CouplingContext& ctx, const OrbitSpectrum& orbit,
                                       cplx s) {
    if (ctx.beta == 0.0)
        throw std::domain_error("s_geometric: beta = 0 has no geometric form");
    auto gs = green_sum(orbit, cplx(s.imag(), 0.5 - s.real()));
    cplx val = 1.0 / ctx.beta + double(ctx.m) * psi(s) + gs.value;
    return {val, gs.tail};
}

}  // namespace pscatter
