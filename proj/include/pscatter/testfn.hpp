// pscatter: admissible test functions h for the trace formula.  Admissibility
// on a strip |Im rho| <= sigma means: even, real on the real axis (conjugate
// symmetric), holomorphic on the strip, and decaying like (1+|Re rho|)^-(2+delta).
// membership_check probes all four properties numerically, including closed
// contour integrals that detect poles hiding inside a claimed strip.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pscatter/common.hpp"
#include "pscatter/quadrature.hpp"

namespace pscatter {

struct TestFunction {
    std::string name;
    double sigma = 0.0;  // claimed analyticity half-width
    double delta = 0.0;  // claimed decay slack: |h| = O((1+|Re|)^-(2+delta))
    std::function<cplx(cplx)> h;
    std::function<cplx(cplx)> hp;  // dh/drho
};

// h(rho) = (rho^2 + a^2)^(-power); poles at +-ia, so any sigma < a is honest.
inline TestFunction make_cauchy_h(double a, int power) {
    if (!(a > 0.0)) throw std::invalid_argument("make_cauchy_h: a must be positive");
    if (power < 2) throw std::invalid_argument("make_cauchy_h: power must be >= 2");
    TestFunction f;
    f.name = "cauchy_a" + fmt_g17(a) + "_p" + std::to_string(power);
    f.sigma = a * (1.0 - 1e-3);
    f.delta = 2.0 * power - 2.5;
    const double a2 = a * a;
    const int p = power;
    f.h = [a2, p](cplx rho) { return std::pow(rho * rho + a2, -p); };
    f.hp = [a2, p](cplx rho) {
        return -2.0 * double(p) * rho * std::pow(rho * rho + a2, -p - 1);
    };
    return f;
}

struct MembershipReport {
    bool even_ok = false, conj_ok = false, decay_ok = false;
    bool analytic_ok = false, loop_ok = false;
    double even_err = 0.0, conj_err = 0.0;
    double decay_envelope = 0.0;  // sup over probes of |h| (1+|x|)^(2+delta)
    double cr_err = 0.0;          // worst Cauchy-Riemann residual
    double loop_err = 0.0;        // worst normalized closed-loop integral
    bool pass = false;
};

// Numerical admissibility check on the function's own claimed strip.
inline MembershipReport membership_check(const TestFunction& f, std::uint64_t seed = 1,
                                         int nsamples = 64) {
    if (!(f.sigma > 0.0)) throw std::invalid_argument("membership_check: sigma not set");
    Rng rng(seed);
    MembershipReport rep;
    const double si = f.sigma * 0.98;

    // symmetry probes at random strip points
    rep.even_err = rep.conj_err = 0.0;
    double scale = 0.0;
    for (int k = 0; k < nsamples; ++k) {
        const cplx z(rng.uniform(-20.0, 20.0), rng.uniform(-si, si));
        const cplx hz = f.h(z);
        scale = std::max(scale, std::abs(hz));
        rep.even_err = std::max(rep.even_err, std::abs(hz - f.h(-z)));
        rep.conj_err = std::max(rep.conj_err, std::abs(std::conj(hz) - f.h(std::conj(z))));
    }
    rep.even_err /= std::max(scale, 1e-300);
    rep.conj_err /= std::max(scale, 1e-300);
    rep.even_ok = rep.even_err <= 1e-12;
    rep.conj_ok = rep.conj_err <= 1e-12;

    // decay envelope along both strip edges: weighting |h| by (1+x)^(2+delta)
    // must not trend upward, otherwise the claimed exponent is too generous.
    // The probe grid resolves features wider than ~6% of |x|, so functions
    // should carry their leading structure below x ~ 50.
    double near_max = 0.0, far_max = 0.0;
    for (int k = 0; k <= 160; ++k) {
        const double x = std::pow(10.0, 3.0 * double(k) / 160.0);  // 1 .. 1e3
        for (double y : {si, -si, 0.0}) {
            const double m = std::abs(f.h(cplx(x, y))) * std::pow(1.0 + x, 2.0 + f.delta);
            if (x < 50.0)
                near_max = std::max(near_max, m);
            else
                far_max = std::max(far_max, m);
        }
    }
    rep.decay_envelope = std::max(near_max, far_max);
    rep.decay_ok = far_max <= 1.25 * near_max && std::isfinite(rep.decay_envelope);

    // local analyticity: Cauchy-Riemann residual from centered differences
    rep.cr_err = 0.0;
    const double step = 1e-5;
    for (int k = 0; k < nsamples; ++k) {
        const cplx z(rng.uniform(-20.0, 20.0), rng.uniform(-0.9 * si, 0.9 * si));
        const cplx dx = (f.h(z + step) - f.h(z - step)) / (2.0 * step);
        const cplx dy = (f.h(z + cplx(0.0, step)) - f.h(z - cplx(0.0, step))) / (2.0 * step);
        rep.cr_err = std::max(rep.cr_err,
                              std::abs(dy - cplx(0.0, 1.0) * dx) / (std::abs(dx) + 1e-300));
    }
    rep.analytic_ok = rep.cr_err <= 1e-6;

    // global analyticity: closed rectangles must integrate to zero; a pole
    // inside the claimed strip shows up as a residue.  The rectangles span
    // only the upper half of the strip: for even conjugate-symmetric
    // functions, poles come in quadruples whose residues cancel around any
    // rectangle crossing the real axis, so full-strip loops are blind to
    // them.  Conjugate symmetry (checked above) covers the lower half.
    // Panels are kept short so a pole honestly just outside the strip does
    // not register as quadrature noise.
    rep.loop_err = 0.0;
    const double panel_len = 0.01 * f.sigma;
    auto loop = [&](double x_lo, double x_hi) {
        const cplx c[5] = {{x_lo, 0.0}, {x_hi, 0.0}, {x_hi, si}, {x_lo, si}, {x_lo, 0.0}};
        cplx total = 0.0;
        double edge_scale = 0.0;
        for (int e = 0; e < 4; ++e) {
            auto g = [&](double u) { return f.h(c[e] + u * (c[e + 1] - c[e])); };
            const double len = std::abs(c[e + 1] - c[e]);
            const int segs =
                std::min(20000, std::max(8, (int)std::ceil(len / panel_len)));
            cplx v = 0.0;
            for (int s2 = 0; s2 < segs; ++s2)
                v += gl16_panel<cplx>(g, double(s2) / segs, double(s2 + 1) / segs);
            total += v * (c[e + 1] - c[e]);
            edge_scale = std::max(edge_scale, std::abs(v * (c[e + 1] - c[e])));
        }
        return std::abs(total) / std::max(edge_scale, 1e-300);
    };
    for (auto [lo, hi] :
         {std::pair{-2.0, 2.0}, {-1.0, 3.0}, {2.0, 8.0}, {8.0, 40.0}, {-40.0, -2.0}})
        rep.loop_err = std::max(rep.loop_err, loop(lo, hi));
    rep.loop_ok = rep.loop_err <= 1e-8;

    rep.pass = rep.even_ok && rep.conj_ok && rep.decay_ok && rep.analytic_ok && rep.loop_ok;
    return rep;
}

// ---- the slowly decaying family used to break polynomial remainder hopes ----

// Parameters of h_eps: a dyadic ladder of Cauchy quadruples centered at
// a_k = T_k + T_k^omega with weights 2^{-n_k (2 + eps/2)}.  The constraints
// 2^{n_k - 1} <= T_k and T_k + T_k^omega <= 2^{n_k + 2}, with n ladder steps
// of at least 4, keep the terms from shadowing each other.
struct DyadicLadderParams {
    double eps = 0.5;
    double sigma = 1.0;   // strip on which admissibility is claimed
    double sigma0 = 2.0;  // pole height of each quadruple; must exceed sigma
    std::vector<double> T;
    std::vector<int> n;

    double omega() const { return eps / 10.0; }

    void validate() const {
        if (!(eps > 0.0 && eps < 2.0)) throw std::invalid_argument("DyadicLadderParams: eps in (0,2)");
        if (!(sigma0 > sigma && sigma > 0.0))
            throw std::invalid_argument("DyadicLadderParams: need sigma0 > sigma > 0");
        if (T.empty() || T.size() != n.size())
            throw std::invalid_argument("DyadicLadderParams: T and n must be nonempty and parallel");
        for (std::size_t k = 0; k < T.size(); ++k) {
            const double a = T[k] + std::pow(T[k], omega());
            if (!(std::exp2(n[k] - 1) <= T[k] && a <= std::exp2(n[k] + 2)))
                throw std::invalid_argument("DyadicLadderParams: dyadic window violated at k=" +
                                            std::to_string(k));
            if (k > 0 && n[k] < n[k - 1] + 4)
                throw std::invalid_argument("DyadicLadderParams: ladder steps need n(k+1) >= n(k)+4");
        }
    }

    // Greedy selection of an admissible ladder from candidate heights.
    static DyadicLadderParams from_heights(const std::vector<double>& heights, double eps,
                                       double sigma, std::size_t max_terms = 40) {
        DyadicLadderParams p;
        p.eps = eps;
        p.sigma = sigma;
        p.sigma0 = sigma + 1.0;
        int last_n = -1000;
        for (double t : heights) {
            if (!(t > 1.0)) continue;
            const int nk = int(std::floor(std::log2(t))) + 1;
            if (nk < last_n + 4) continue;
            const double a = t + std::pow(t, p.omega());
            if (!(std::exp2(nk - 1) <= t && a <= std::exp2(nk + 2))) continue;
            p.T.push_back(t);
            p.n.push_back(nk);
            last_n = nk;
            if (p.T.size() >= max_terms) break;
        }
        if (p.T.empty())
            throw std::invalid_argument("DyadicLadderParams: no admissible heights in the input");
        p.validate();
        return p;
    }
};

// The ladder function itself.  Each rung contributes the even, conjugate
// symmetric quadruple sum_{s1,s2 in +-1} (rho + s1 a_k + s2 i sigma0)^{-4}.
inline TestFunction make_ladder_h(const DyadicLadderParams& p) {
    p.validate();
    TestFunction f;
    f.name = "ladder_eps" + fmt_g17(p.eps);
    f.sigma = p.sigma;
    f.delta = 0.5 * p.eps;
    std::vector<double> a(p.T.size()), wgt(p.T.size());
    for (std::size_t k = 0; k < p.T.size(); ++k) {
        a[k] = p.T[k] + std::pow(p.T[k], p.omega());
        wgt[k] = std::exp2(-double(p.n[k]) * (2.0 + 0.5 * p.eps));
    }
    const double s0 = p.sigma0;
    f.h = [a, wgt, s0](cplx rho) {
        CompensatedSumC acc;
        for (std::size_t k = 0; k < a.size(); ++k) {
            for (double s1 : {1.0, -1.0})
                for (double s2 : {1.0, -1.0}) {
                    const cplx d = rho + s1 * a[k] + cplx(0.0, s2 * s0);
                    const cplx d2 = d * d;
                    acc.add(wgt[k] / (d2 * d2));
                }
        }
        return acc.result();
    };
    f.hp = [a, wgt, s0](cplx rho) {
        CompensatedSumC acc;
        for (std::size_t k = 0; k < a.size(); ++k) {
            for (double s1 : {1.0, -1.0})
                for (double s2 : {1.0, -1.0}) {
                    const cplx d = rho + s1 * a[k] + cplx(0.0, s2 * s0);
                    const cplx d2 = d * d;
                    acc.add(-4.0 * wgt[k] / (d2 * d2 * d));
                }
        }
        return acc.result();
    };
    return f;
}

}  // namespace pscatter
