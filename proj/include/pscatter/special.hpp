// pscatter: digamma/trigamma in the scattering normalization psi = Gamma'/Gamma / 2pi,
// and the zero of 1 + m*beta*psi(1/2+v) on the real axis.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "pscatter/common.hpp"

namespace pscatter {

namespace detail {

// B_{2n}/(2n) for the digamma asymptotic series
inline constexpr double dig_asym[7] = {
    1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
};
// B_{2n} for the trigamma asymptotic series
inline constexpr double tri_asym[7] = {
    1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0,
    5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0,
};

inline constexpr double asym_radius = 14.0;

inline void check_pole(const cplx& s) {
    if (s.imag() == 0.0 && s.real() <= 0.0 && s.real() == std::floor(s.real()))
        throw std::domain_error("digamma: pole at non-positive integer");
}

// Gamma'/Gamma by reflection + argument-shift recurrence + asymptotic series.
inline cplx digamma_raw(cplx s) {
    check_pole(s);
    cplx acc = 0.0;
    if (s.real() < 0.5) {
        // psi(s) = psi(1-s) - pi*cot(pi*s)
        cplx picot;
        // evaluate cot(pi s) stably for large |Im s|
        cplx z = pi * s;
        picot = pi * std::cos(z) / std::sin(z);
        acc -= picot;
        s = 1.0 - s;
    }
    while (std::abs(s) < asym_radius) {
        acc -= 1.0 / s;
        s += 1.0;
    }
    cplx inv = 1.0 / s, inv2 = inv * inv;
    cplx sum = std::log(s) - 0.5 * inv;
    cplx p = inv2;
    for (double c : dig_asym) {
        sum -= c * p;
        p *= inv2;
    }
    return acc + sum;
}

inline cplx trigamma_raw(cplx s) {
    check_pole(s);
    cplx acc = 0.0;
    double sign = 1.0;
    if (s.real() < 0.5) {
        // psi'(s) = -psi'(1-s) + pi^2/sin^2(pi*s)
        cplx sn = std::sin(pi * s);
        acc += pi * pi / (sn * sn);
        s = 1.0 - s;
        sign = -1.0;
    }
    while (std::abs(s) < asym_radius) {
        acc += sign / (s * s);
        s += 1.0;
    }
    cplx inv = 1.0 / s, inv2 = inv * inv;
    cplx sum = inv + 0.5 * inv2;
    cplx p = inv * inv2;
    for (double c : tri_asym) {
        sum += c * p;
        p *= inv2;
    }
    return acc + sign * sum;
}

}  // namespace detail

// psi(s) = (1/2pi) Gamma'(s)/Gamma(s)
inline cplx psi(const cplx& s) { return detail::digamma_raw(s) / two_pi; }
inline double psi(double s) { return detail::digamma_raw(cplx(s, 0.0)).real() / two_pi; }

// psi'(s) = (1/2pi) d/ds [Gamma'/Gamma]
inline cplx psi_prime(const cplx& s) { return detail::trigamma_raw(s) / two_pi; }
inline double psi_prime(double s) { return detail::trigamma_raw(cplx(s, 0.0)).real() / two_pi; }

// plain digamma, occasionally clearer in tests
inline double digamma(double s) { return detail::digamma_raw(cplx(s, 0.0)).real(); }

// ---- the renormalized-coupling denominator zero ---------------------------

struct DenomZero {
    double v;          // 1 + m*beta*psi(1/2+v) = 0, v > -1/2
    double residual;   // |1 + m*beta*psi(1/2+v)| at the returned v
    int iterations;
};

// Unique real zero of v -> 1 + m*beta*psi(1/2+v) on (-1/2, inf).  Exists for
// every beta != 0 because digamma is a monotone bijection of (0,inf) onto R.
// Bisection runs in log(1/2+v) so extreme targets (tiny |beta|) stay stable.
inline DenomZero denom_zero(long m, double beta) {
    if (m < 1) throw std::invalid_argument("denom_zero: stabilizer order m must be >= 1");
    if (beta == 0.0 || !std::isfinite(beta))
        throw std::invalid_argument("denom_zero: beta must be finite and nonzero");
    const double target = -two_pi / (double(m) * beta);  // digamma(1/2+v) = target
    auto f = [target](double u) {  // u = log(1/2+v)
        return digamma(std::exp(u)) - target;
    };
    double lo = std::log(1e-18), hi = std::log(2.0);
    // digamma(e^lo) ~ -1e18, far below any representable target
    int guard = 0;
    while (f(hi) < 0.0) {
        hi += 1.0;
        if (++guard > 700) throw std::runtime_error("denom_zero: bracket expansion failed");
    }
    int it = 0;
    while (hi - lo > 1e-16 * std::max(1.0, std::abs(hi)) && it < 300) {
        double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
        ++it;
    }
    double x = std::exp(0.5 * (lo + hi));
    DenomZero r;
    r.v = x - 0.5;
    r.residual = std::abs(1.0 + double(m) * beta * psi(x));
    r.iterations = it;
    return r;
}

}  // namespace pscatter
