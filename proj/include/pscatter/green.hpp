// pscatter: free resolvent kernel on the hyperbolic plane and its sum over a
// point orbit.  The defining integral
//   G_{1/2+i rho}(d) = -(1/(2 pi sqrt 2)) Int_d^oo e^{-i rho t} / sqrt(cosh t - cosh d) dt
// converges absolutely for Im rho < -1/2; the substitution t = d + u^2
// removes the inverse-square-root endpoint singularity.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "pscatter/common.hpp"
#include "pscatter/fuchsian.hpp"
#include "pscatter/quadrature.hpp"

namespace pscatter {

namespace detail {

// cosh(d+x) - cosh(d) = 2 sinh(d + x/2) sinh(x/2), stable for small x
inline double cosh_diff(double d, double x) {
    return 2.0 * std::sinh(d + 0.5 * x) * std::sinh(0.5 * x);
}

inline double green_cutoff(double d, double w) {
    // beyond t = d + T the remaining mass is below e^{-(w+1/2)T} relative
    return d + 40.0 / (w + 0.5);
}

}  // namespace detail

// Free resolvent kernel at spectral parameter s = 1/2 + i rho, evaluated at
// hyperbolic distance d > 0.  Requires Im rho <= -(1/2 + margin).
inline cplx free_green(cplx rho, double d, double abs_tol = tol::green_abs) {
    if (!(d > 0.0) || !std::isfinite(d))
        throw std::domain_error("free_green: distance must be positive");
    const double w = -rho.imag();
    if (!(w >= 0.5 + tol::green_margin))
        throw std::domain_error("free_green: requires Im rho <= -1/2 - margin");
    const double umax = std::sqrt(detail::green_cutoff(d, w) - d);
    auto f = [&](double u) -> cplx {
        const double t = d + u * u;
        const double den = std::sqrt(detail::cosh_diff(d, u * u));
        return std::exp(cplx(0.0, -1.0) * rho * t) * (2.0 * u / den);
    };
    cplx val = integrate_gk15<cplx>(f, 0.0, umax, abs_tol, 1e-11, 8000);
    return -val / (two_pi * std::sqrt(2.0));
}

// Same kernel addressed by s directly (rho = -i (s - 1/2)).
inline cplx free_green_s(cplx s, double d, double abs_tol = tol::green_abs) {
    return free_green(cplx(s.imag(), 0.5 - s.real()), d, abs_tol);
}

// Int_l^oo e^{-sigma t} / sqrt(cosh t - cosh l) dt, the modulus envelope of
// one orbit term on the horizontal line Im rho = -sigma.  Used for pruning
// and for the enumeration tail certificates.
inline double exp_weight_integral(double l, double sigma) {
    if (!(l > 0.0)) throw std::domain_error("exp_weight_integral: l must be positive");
    if (!(sigma > 0.5)) throw std::domain_error("exp_weight_integral: sigma must exceed 1/2");
    const double umax = std::sqrt(detail::green_cutoff(l, sigma) - l);
    auto f = [&](double u) {
        const double t = l + u * u;
        return std::exp(-sigma * t) * 2.0 * u / std::sqrt(detail::cosh_diff(l, u * u));
    };
    return integrate_gk15<double>(f, 0.0, umax, tol::green_abs, 1e-11, 8000);
}

// Orbit sum of the free kernel, with the rigorous truncation tail attached.
inline ValueWithTail<cplx> green_sum(const OrbitSpectrum& orbit, cplx rho,
                                     double abs_tol = tol::green_abs) {
    CompensatedSumC acc;
    for (const auto& e : orbit.lengths)
        acc.add(double(e.mult) * free_green(rho, e.length, abs_tol));
    return {acc.result(), orbit_tail_bound(orbit, -rho.imag())};
}

}  // namespace pscatter
