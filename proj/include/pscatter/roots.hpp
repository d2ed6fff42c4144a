// pscatter: scalar bisection and an argument-principle zero counter on
// rectangles, used to certify uniqueness claims made elsewhere numerically.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

#include "pscatter/common.hpp"

namespace pscatter {

struct BisectResult {
    double x;
    double fx;
    int iterations;
};

// Bisection on [lo, hi]; requires a sign change. Stops when the bracket
// width drops below tol_x * max(1, |x|).
template <class F>
BisectResult bisect(F&& f, double lo, double hi, double tol_x = tol::bisect_tol,
                    int max_iter = 200) {
    if (!(lo < hi)) throw std::invalid_argument("bisect: need lo < hi");
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if ((flo < 0.0) == (fhi < 0.0))
        throw std::invalid_argument("bisect: no sign change on the bracket");
    int it = 0;
    while (it < max_iter) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return {mid, 0.0, it};
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
        ++it;
        if (hi - lo <= tol_x * std::max(1.0, std::max(std::abs(lo), std::abs(hi))))
            break;
    }
    double x = 0.5 * (lo + hi);
    return {x, f(x), it};
}

struct Rect {
    double re_lo, re_hi, im_lo, im_hi;
};

struct WindingResult {
    long count;        // zeros minus poles inside, by the argument principle
    double residual;   // |total arg change - 2 pi count|
    long evaluations;
};

namespace detail {

template <class F>
void winding_walk_edge(F& f, cplx z1, cplx z2, cplx f1, cplx f2, double& total,
                       long& evals, int depth) {
    if (std::abs(f1) < 1e-280 || std::abs(f2) < 1e-280)
        throw std::runtime_error("winding_number: function vanishes on the contour");
    double d = std::arg(f2 / f1);
    if (std::abs(d) <= 0.8) {
        total += d;
        return;
    }
    if (depth >= 48)
        throw std::runtime_error("winding_number: argument change unresolved (zero on contour?)");
    cplx zm = 0.5 * (z1 + z2);
    cplx fm = f(zm);
    ++evals;
    winding_walk_edge(f, z1, zm, f1, fm, total, evals, depth + 1);
    winding_walk_edge(f, zm, z2, fm, f2, total, evals, depth + 1);
}

}  // namespace detail

// Counterclockwise winding number of f around 0 along the rectangle boundary.
// Each edge is refined until consecutive samples differ by < 0.8 rad in arg.
template <class F>
WindingResult winding_number(F&& f, const Rect& r, int base_samples = 16) {
    if (!(r.re_lo < r.re_hi) || !(r.im_lo < r.im_hi))
        throw std::invalid_argument("winding_number: degenerate rectangle");
    if (base_samples < 2) base_samples = 2;
    cplx corners[5] = {
        {r.re_lo, r.im_lo}, {r.re_hi, r.im_lo}, {r.re_hi, r.im_hi},
        {r.re_lo, r.im_hi}, {r.re_lo, r.im_lo},
    };
    double total = 0.0;
    long evals = 0;
    for (int e = 0; e < 4; ++e) {
        cplx za = corners[e], zb = corners[e + 1];
        cplx zprev = za;
        cplx fprev = f(zprev);
        ++evals;
        for (int j = 1; j <= base_samples; ++j) {
            cplx z = za + (zb - za) * (double(j) / base_samples);
            cplx fz = f(z);
            ++evals;
            detail::winding_walk_edge(f, zprev, z, fprev, fz, total, evals, 0);
            zprev = z;
            fprev = fz;
        }
    }
    WindingResult w;
    w.count = std::lround(total / two_pi);
    w.residual = std::abs(total - two_pi * double(w.count));
    w.evaluations = evals;
    return w;
}

}  // namespace pscatter
