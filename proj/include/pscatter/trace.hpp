// pscatter: both sides of the diffractive trace identity.
//
// Geometric side machinery (orbit data):
//   select_sigma / select_nu   contour heights with certified series ratio
//   transform_g                g_{beta,k}(t) = ((-1)^k/(2 pi i k)) Int h'(rho)
//                              e^{-i rho t} / u(rho)^k drho,  u = 1 + m beta psi
//   identity_term              (1/(2 pi i)) Int h d log u
//   diffractive_sum            Sum over k-tuples of orbit lengths of nested
//                              integrals of g against the kernel weights
//   pretrace_rhs               -(1/(2 pi i)) Int h' log(beta S) drho with S in
//                              geometric form, principal branch tracked
// Spectral side machinery (eigenvalue data):
//   spectral_side              Sum_j h(rho_j^alpha) - h(rho_j), paired
//   truncated_check            residue count vs contour integral on B(T)
//
// The headline identity: pretrace_rhs = identity_term + Sum_k diffractive,
// exact for the S built from the same truncated orbit, up to quadrature and
// the k-series tail.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "pscatter/common.hpp"
#include "pscatter/fuchsian.hpp"
#include "pscatter/green.hpp"
#include "pscatter/quadrature.hpp"
#include "pscatter/solver.hpp"
#include "pscatter/special.hpp"
#include "pscatter/spectral.hpp"
#include "pscatter/testfn.hpp"

namespace pscatter {

struct ContourSpec {
    double height = 0.0;       // contour Im rho = -height
    double re_cutoff = 0.0;    // nodes cover |Re rho| <= re_cutoff
    double panel_width = 0.0;
    double cutoff_err = 0.0;   // estimated mass beyond the cutoff
};

struct QuadValue {
    double value = 0.0;
    double imag_residual = 0.0;  // |Im| of the nominally real contour integral
    double quad_err = 0.0;
};

// ---- contour height selection ----------------------------------------------

struct SigmaSelection {
    double sigma = 0.0;      // accepted height
    double v_beta = 0.0;     // real zero of 1 + m beta psi(1/2 + v)
    double v_min = 0.0;      // inf over the line of |1/beta + m psi|
    double q = 0.0;          // v_min / log(1/2 + sigma)
    double orbit_env = 0.0;  // rigorous bound on Sum |G| along the line
    double ratio = 0.0;      // orbit_env / v_min, the series ratio
    double c_emp = 0.0;      // empirical envelope constant over sigma in [1,10]
};

namespace detail {

// 1/beta + m psi(1/2 + sigma): the infimum of the denominator modulus along
// Im rho = -sigma.  Monotone Re psi in |Im s| puts the infimum at the real
// point; positive exactly when sigma > v_beta.
inline double denominator_floor(const CouplingContext& ctx, double sigma) {
    return 1.0 / ctx.beta + double(ctx.m) * psi(0.5 + sigma);
}

inline double orbit_envelope(const OrbitSpectrum& orbit, double sigma) {
    CompensatedSum acc;
    for (const auto& e : orbit.lengths)
        acc.add(double(e.mult) * exp_weight_integral(e.length, sigma));
    return acc.result() / (two_pi * std::sqrt(2.0)) + orbit_tail_bound(orbit, sigma);
}

}  // namespace detail

// nu = v_beta + min(0.1, (sigma - v_beta)/2) when the denominator zero sits
// inside (0, sigma); 0 otherwise.
inline double select_nu(const CouplingContext& ctx, double sigma) {
    if (ctx.beta == 0.0) return 0.0;
    const double v = denom_zero(ctx.m, ctx.beta).v;
    if (v > 0.0 && v < sigma) return v + std::min(0.1, 0.5 * (sigma - v));
    return 0.0;
}

// Smallest grid sigma whose certified orbit envelope is dominated by the
// denominator floor (ratio < ratio_max), staying above the denominator zero
// and above |Im rho_0^alpha| when a perturbed ground state is known.
inline SigmaSelection select_sigma(const CouplingContext& ctx, const OrbitSpectrum& orbit,
                                   double rho0_im = 0.0, double ratio_max = tol::ratio_max) {
    if (ctx.beta == 0.0)
        throw std::invalid_argument("select_sigma: beta = 0 has no geometric series");
    SigmaSelection sel;
    sel.v_beta = denom_zero(ctx.m, ctx.beta).v;

    // empirical envelope constant: fit E(sigma) <= c_emp / sqrt(1/2 + sigma)
    for (double s : {1.0, 1.5, 2.0, 3.0, 5.0, 7.0, 10.0})
        sel.c_emp = std::max(sel.c_emp,
                             detail::orbit_envelope(orbit, s) * std::sqrt(0.5 + s));

    static const double grid[] = {0.6,  0.8,  1.0,  1.25, 1.5,  1.75, 2.0,
                                  2.5,  3.0,  4.0,  5.0,  7.0,  10.0, 15.0,
                                  20.0, 30.0, 50.0, 100.0, 300.0, 1000.0};
    for (double s : grid) {
        if (s > tol::sigma_cap) break;
        if (s <= 0.5 + 2.0 * tol::green_margin) continue;
        if (s <= sel.v_beta + 0.05) continue;
        if (s <= rho0_im + 0.05) continue;
        const double vmin = detail::denominator_floor(ctx, s);
        if (!(vmin > 0.0)) continue;
        const double env = detail::orbit_envelope(orbit, s);
        const double gate = std::max(env, sel.c_emp / std::sqrt(0.5 + s)) / vmin;
        if (gate < ratio_max) {
            // spot-check the monotone-infimum claim along the line
            for (int j = 0; j <= 24; ++j) {
                const double t = 0.05 * std::pow(1.45, j);
                const double v = std::abs(1.0 / ctx.beta +
                                          double(ctx.m) * psi(cplx(0.5 + s, t)));
                if (v < vmin * (1.0 - 1e-10))
                    throw std::runtime_error("select_sigma: denominator floor violated");
            }
            sel.sigma = s;
            sel.v_min = vmin;
            sel.q = vmin / std::log(0.5 + s);
            sel.orbit_env = env;
            sel.ratio = env / vmin;
            return sel;
        }
    }
    throw std::runtime_error(
        "select_sigma: no admissible height below the cap; v_beta = " + fmt_g17(sel.v_beta) +
        ", envelope constant = " + fmt_g17(sel.c_emp));
}

// ---- shared contour tables ---------------------------------------------------

namespace detail {

// Int_0^{sqrt(t_ax)} phi_l(u) exp(-zeta (l + u^2)) du with the kernel weight
// phi_l(u) = 2u / sqrt(cosh(l + u^2) - cosh l); panels sized to the phase
// rate Im(zeta) * t_ax.
inline cplx axis_integral(double l, cplx zeta, double t_ax) {
    const int n_pan = int(std::ceil(std::abs(zeta.imag()) * t_ax / (two_pi * 2.5))) + 2;
    CompensatedSumC acc;
    for (int j = 0; j < n_pan; ++j) {
        const double ta = t_ax * double(j) / n_pan, tb = t_ax * double(j + 1) / n_pan;
        auto f = [&](double u) {
            const double t2 = u * u;
            return std::exp(-zeta * (l + t2)) * (2.0 * u / std::sqrt(cosh_diff(l, t2)));
        };
        acc.add(gl16_panel<cplx>(f, std::sqrt(ta), std::sqrt(tb)));
    }
    return acc.result();
}

struct PanelNodes {
    std::vector<double> x, w;   // nodes ascending on [0, X], quadrature weights
    std::vector<double> werr;   // (kronrod - gauss) weights for error estimates
    std::size_t per_panel = 0;
};

inline PanelNodes gk15_layout(double X, double width) {
    PanelNodes pn;
    pn.per_panel = 15;
    const int n = std::max(1, int(std::ceil(X / width)));
    for (int p = 0; p < n; ++p) {
        const double a = X * double(p) / n, b = X * double(p + 1) / n;
        const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
        struct Node { double t, wk, wg; };
        std::vector<Node> nodes;
        nodes.push_back({0.0, gk15_table[0][2], gk15_table[0][1]});
        for (int i = 1; i < 8; ++i) {
            nodes.push_back({-gk15_table[i][0], gk15_table[i][2], gk15_table[i][1]});
            nodes.push_back({gk15_table[i][0], gk15_table[i][2], gk15_table[i][1]});
        }
        std::sort(nodes.begin(), nodes.end(), [](const Node& l, const Node& r) {
            return l.t < r.t;
        });
        for (const auto& nd : nodes) {
            pn.x.push_back(c + hw * nd.t);
            pn.w.push_back(hw * nd.wk);
            pn.werr.push_back(hw * (nd.wk - nd.wg));
        }
    }
    return pn;
}

}  // namespace detail

// Precomputed values along the half-line contour rho = x - i nu, x >= 0:
// h', the denominator u, and per-orbit-length kernel integrals F.  The F row
// for length l satisfies -F[l][q]/(2 pi sqrt 2) = G_{rho_q}(l) up to the
// t-axis cutoff, so orbit sums along the contour become weighted row sums.
struct ContourTable {
    double nu = 0.0;
    double t_ax = 0.0;
    ContourSpec spec;
    detail::PanelNodes nodes;
    std::vector<cplx> hp, u;
    std::vector<double> lengths;
    std::vector<long> mults;
    std::vector<std::vector<cplx>> F;
};

namespace detail {

inline double hp_cutoff(const TestFunction& h, double nu, double rel_cut) {
    double scale = 0.0;
    for (double x = 0.25; x <= 8.0; x *= 2.0)
        scale = std::max(scale, std::abs(h.hp(cplx(x, -nu))));
    double X = 24.0;
    while (X < 5e3 && std::abs(h.hp(cplx(X, -nu))) * (1.0 + X) > rel_cut * scale)
        X *= 1.25;
    return X;
}

}  // namespace detail

inline ContourTable make_contour_table(const CouplingContext& ctx, const TestFunction& h,
                                       const OrbitSpectrum* orbit, double nu,
                                       double sigma_env, double freq_max,
                                       double width_scale = 1.0,
                                       double rel_cut = 1e-14) {
    ContourTable tab;
    tab.nu = nu;
    tab.t_ax = (40.0 + 5.0 * std::max(0.0, 1.0 - sigma_env)) / (sigma_env + 0.5) + 5.0;
    const double X = detail::hp_cutoff(h, nu, rel_cut);
    const double width = width_scale * std::min(0.6, 14.0 / (freq_max + 4.0));
    tab.nodes = detail::gk15_layout(X, width);
    tab.spec.height = nu;
    tab.spec.re_cutoff = X;
    tab.spec.panel_width = width;
    tab.spec.cutoff_err =
        std::abs(h.hp(cplx(X, -nu))) * X / (1.0 + h.delta);  // envelope integral beyond X

    const std::size_t n = tab.nodes.x.size();
    tab.hp.resize(n);
    tab.u.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
        const cplx rho(tab.nodes.x[q], -nu);
        tab.hp[q] = h.hp(rho);
        tab.u[q] = 1.0 + double(ctx.m) * ctx.beta * psi(0.5 + cplx(0.0, 1.0) * rho);
    }
    if (orbit) {
        for (const auto& e : orbit->lengths) {
            tab.lengths.push_back(e.length);
            tab.mults.push_back(e.mult);
        }
        tab.F.resize(tab.lengths.size());
        parallel_for(tab.lengths.size(), [&](std::size_t i) {
            auto& row = tab.F[i];
            row.resize(n);
            for (std::size_t q = 0; q < n; ++q)
                row[q] = detail::axis_integral(tab.lengths[i],
                                               cplx(nu, tab.nodes.x[q]), tab.t_ax);
        });
    }
    return tab;
}

// Orbit part of beta * S along the table's contour: O_q = sum_i mult_i G(l_i).
inline cplx table_orbit_value(const ContourTable& tab, std::size_t q) {
    CompensatedSumC acc;
    for (std::size_t i = 0; i < tab.F.size(); ++i)
        acc.add(double(tab.mults[i]) * tab.F[i][q]);
    return -acc.result() / (two_pi * std::sqrt(2.0));
}

// ---- the transform g_{beta,k} ------------------------------------------------

namespace detail {

inline void check_contour_height(const CouplingContext& ctx, double nu) {
    if (ctx.beta == 0.0) return;
    const double v = denom_zero(ctx.m, ctx.beta).v;
    if (std::abs(nu - v) < 1e-6)
        throw std::invalid_argument("contour collision: height " + fmt_g17(nu) +
                                    " sits on the denominator zero v_beta = " + fmt_g17(v));
}

}  // namespace detail

// Full-line evaluation of g_{beta,k}(t); the imaginary part is a numerical
// residual (the integrand folds to a real value by conjugate symmetry).
inline cplx transform_g(const TestFunction& h, const CouplingContext& ctx, int k,
                        double nu, double t) {
    if (k < 1) throw std::invalid_argument("transform_g: k must be >= 1");
    if (!(t > 0.0)) throw std::invalid_argument("transform_g: t must be positive");
    detail::check_contour_height(ctx, nu);
    const double X = detail::hp_cutoff(h, nu, 1e-14);
    auto f = [&](double x) -> cplx {
        const cplx rho(x, -nu);
        const cplx u = 1.0 + double(ctx.m) * ctx.beta * psi(0.5 + cplx(0.0, 1.0) * rho);
        return h.hp(rho) * std::exp(cplx(0.0, -1.0) * rho * t) / std::pow(u, k);
    };
    const double budget = 1e-13;
    cplx right = integrate_gk15<cplx>(f, 0.0, X, budget, 1e-12, 60000);
    cplx left = integrate_gk15<cplx>(f, -X, 0.0, budget, 1e-12, 60000);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return sign / (two_pi * cplx(0.0, 1.0) * double(k)) * (left + right);
}

// Contour data shared by every g_{beta,k} evaluation at one height, with the
// decay envelopes |g_k(t)| <= M_k e^{-sigma t} certified at the selection
// height.
struct GTransformSet {
    double nu = 0.0;
    double sigma_env = 0.0;
    int k_max = 0;
    ContourTable tab;                  // no F rows needed here
    std::vector<std::vector<cplx>> A;  // A[k-1][q] = w_q h'_q / u_q^k
    double H1 = 0.0;                   // Int |h'| along the envelope height
    std::vector<double> M;             // M[k-1]

    double g(int k, double t) const {
        CompensatedSumC acc;
        const auto& a = A[std::size_t(k - 1)];
        for (std::size_t q = 0; q < tab.nodes.x.size(); ++q)
            acc.add(a[q] * std::exp(cplx(0.0, -tab.nodes.x[q] * t)));
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        return sign / (pi * double(k)) * std::exp(-nu * t) * acc.result().imag();
    }
};

// Int over the full line of |h'(x - i sigma)| dx, by evenness of |h'|.
inline double contour_abs_hp(const TestFunction& h, double sigma) {
    const double X = detail::hp_cutoff(h, sigma, 1e-14);
    auto f = [&](double x) { return std::abs(h.hp(cplx(x, -sigma))); };
    double v = integrate_gk15<double>(f, 0.0, X, 1e-14, 1e-12, 40000);
    v += std::abs(h.hp(cplx(X, -sigma))) * X / (1.0 + h.delta);
    return 2.0 * v;
}

inline GTransformSet make_transform_set(const TestFunction& h, const CouplingContext& ctx,
                                        const SigmaSelection& sel, double nu, int k_max,
                                        double freq_max) {
    if (k_max < 1) throw std::invalid_argument("make_transform_set: k_max must be >= 1");
    detail::check_contour_height(ctx, nu);
    GTransformSet set;
    set.nu = nu;
    set.sigma_env = sel.sigma;
    set.k_max = k_max;
    set.tab = make_contour_table(ctx, h, nullptr, nu, sel.sigma, freq_max);
    const std::size_t n = set.tab.nodes.x.size();
    set.A.assign(std::size_t(k_max), std::vector<cplx>(n));
    for (std::size_t q = 0; q < n; ++q) {
        cplx a = set.tab.nodes.w[q] * set.tab.hp[q];
        for (int k = 1; k <= k_max; ++k) {
            a /= set.tab.u[q];
            set.A[std::size_t(k - 1)][q] = a;
        }
    }
    set.H1 = contour_abs_hp(h, sel.sigma);
    const double floor = std::abs(ctx.beta) * sel.v_min;
    for (int k = 1; k <= k_max; ++k)
        set.M.push_back(set.H1 / (two_pi * double(k) * std::pow(floor, k)));
    return set;
}

// Cubic interpolation of g_k on a log-spaced t-grid, for the product
// quadratures that re-evaluate g at many points.
struct GSpline {
    int k = 0;
    double nu = 0.0, sign_over_pik = 0.0;
    double z0 = 0.0, dz = 0.0;
    double t_lo = 0.0, t_hi = 0.0;
    std::vector<double> y;  // f(t) = Im sum_q A_q e^{-i x_q t} at t = exp(z0 + j dz)

    double operator()(double t) const {
        if (t < t_lo * (1.0 - 1e-12) || t > t_hi * (1.0 + 1e-12))
            throw std::domain_error("GSpline: t = " + fmt_g17(t) + " outside [" +
                                    fmt_g17(t_lo) + ", " + fmt_g17(t_hi) + "]");
        const double z = std::log(t);
        double ju = (z - z0) / dz;
        long j = long(ju);
        j = std::max(1L, std::min(long(y.size()) - 3, j));
        const double s = ju - double(j);
        const double ym1 = y[j - 1], y0 = y[j], y1 = y[j + 1], y2 = y[j + 2];
        const double v = y0 + 0.5 * s * (y1 - ym1 +
                         s * (2.0 * ym1 - 5.0 * y0 + 4.0 * y1 - y2 +
                              s * (3.0 * (y0 - y1) + y2 - ym1)));
        return sign_over_pik * std::exp(-nu * t) * v;
    }
};

inline GSpline build_g_spline(const GTransformSet& set, int k, double t_lo, double t_hi,
                              double target_err = tol::spline_tol) {
    if (k < 1 || k > set.k_max) throw std::invalid_argument("build_g_spline: k out of range");
    if (!(t_lo > 0.0 && t_hi > t_lo)) throw std::invalid_argument("build_g_spline: bad range");
    GSpline sp;
    sp.k = k;
    sp.nu = set.nu;
    sp.sign_over_pik = ((k % 2 == 0) ? 1.0 : -1.0) / (pi * double(k));
    sp.t_lo = t_lo;
    sp.t_hi = t_hi;
    const auto& a = set.A[std::size_t(k - 1)];
    const auto& xs = set.tab.nodes.x;
    // the 4-point cubic is third-order accurate; size the step from the
    // third-derivative scale of f(t) = Im sum_q A_q exp(-i x_q t)
    double b3 = 0.0;
    for (std::size_t q = 0; q < xs.size(); ++q)
        b3 += std::abs(a[q]) * std::pow(xs[q], 3);
    double dt = std::cbrt(4.0 * std::max(target_err, 1e-14) / std::max(b3, 1e-300));
    dt = std::min(0.05, dt);
    sp.dz = dt / t_hi;
    sp.z0 = std::log(t_lo) - sp.dz;
    std::size_t npts = std::size_t((std::log(t_hi) - sp.z0) / sp.dz) + 4;
    if (npts > 2'000'000)
        throw std::runtime_error("build_g_spline: grid would need " + std::to_string(npts) +
                                 " points; shrink the range");
    sp.y.resize(npts);
    parallel_for(npts, [&](std::size_t j) {
        const double t = std::exp(sp.z0 + sp.dz * double(j));
        CompensatedSumC acc;
        for (std::size_t q = 0; q < xs.size(); ++q)
            acc.add(a[q] * std::exp(cplx(0.0, -xs[q] * t)));
        sp.y[j] = acc.result().imag();
    });
    return sp;
}

// ---- identity term -----------------------------------------------------------

// (1/(2 pi i)) Int_{Im rho = -nu} h(rho) d/drho log(1 + m beta psi(1/2+i rho)) drho.
// Real up to quadrature noise; both half-lines are integrated independently so
// the imaginary residual is a genuine symmetry diagnostic.
inline QuadValue identity_term(const TestFunction& h, const CouplingContext& ctx, double nu) {
    if (ctx.beta == 0.0) return {0.0, 0.0, 0.0};
    detail::check_contour_height(ctx, nu);
    const double mb = double(ctx.m) * ctx.beta;
    auto f = [&](double x) -> cplx {
        const cplx s = cplx(0.5 + nu, x);  // 1/2 + i rho at rho = x - i nu
        const cplx u = 1.0 + mb * psi(s);
        return h.h(cplx(x, -nu)) * cplx(0.0, 1.0) * mb * psi_prime(s) / u;
    };
    double X = 40.0;
    while (X < 1e5 && std::abs(f(X)) * X > 1e-16) X *= 1.3;
    double err_r = 0.0, err_l = 0.0;
    cplx right = integrate_gk15<cplx>(f, 0.0, X, 1e-14, 1e-12, 40000, &err_r);
    cplx left = integrate_gk15<cplx>(f, -X, 0.0, 1e-14, 1e-12, 40000, &err_l);
    const cplx total = (left + right) / (two_pi * cplx(0.0, 1.0));
    QuadValue out;
    out.value = total.real();
    out.imag_residual = std::abs(total.imag());
    out.quad_err = (err_r + err_l) / two_pi + std::abs(f(X)) * X / (1.0 + h.delta);
    if (out.imag_residual > tol::identity_imag)
        throw std::runtime_error("identity_term: imaginary residual " +
                                 fmt_g17(out.imag_residual) + " exceeds tolerance");
    return out;
}

// ---- diffractive k-tuple sums --------------------------------------------------

struct DiffractiveResult {
    std::vector<double> terms;        // D_k, k = 1..k_max
    std::vector<double> tuple_tails;  // envelope mass of pruned tuples, per k
    std::vector<double> quad_errs;    // per-k quadrature refinement estimate
    double series_tail = 0.0;         // bound on sum over k > k_max
    double ratio = 0.0;
    long tuples_evaluated = 0;
    long tuples_pruned = 0;
};

namespace detail {

struct TupleWork {
    const ContourTable* tab;
    const std::vector<cplx>* Ak;     // column weights w hp / u^k
    double prefac;                   // (-beta/(2 pi sqrt 2))^k
    double sign_over_pik;
    int k;
    double Mk;                       // envelope constant
    const std::vector<double>* env;  // m_i * Ehat_i per length
    const std::vector<double>* env_suffix;  // sum of env over [i, end)
    double prune_tol;
    double* term;
    double* tail;
    long* n_eval;
    long* n_pruned;
    std::vector<std::vector<cplx>>* fprod;  // workspace per depth
    std::vector<double>* fact;              // factorials 0..k
};

// DFS over nondecreasing index tuples.  envP carries Prod m_i Ehat_i; the
// whole-subtree envelope uses the suffix sum, so once a branch is pruned all
// later siblings are prunable too.
inline void tuple_dfs(TupleWork& w, std::size_t start, int depth, double envP,
                      double mult_elems, int rep_count, double rep_denom,
                      std::size_t prev_idx) {
    const std::size_t nlen = w.tab->lengths.size();
    const int rem = w.k - depth;
    for (std::size_t i = start; i < nlen; ++i) {
        const double env_i = (*w.env)[i];
        // envelope of every tuple whose remaining slots draw from index >= i
        const double subtree = std::abs(w.prefac) * w.Mk * envP *
                               std::pow((*w.env_suffix)[i], rem) *
                               (*w.fact)[std::size_t(w.k)];
        if (subtree <= w.prune_tol) {
            *w.tail += subtree;
            ++(*w.n_pruned);
            return;  // suffix sums shrink with i: all later siblings are covered
        }
        const int reps = (depth > 0 && i == prev_idx) ? rep_count + 1 : 1;
        const double denom = (depth > 0 && i == prev_idx)
                                 ? rep_denom * double(reps)
                                 : rep_denom;
        // multiply the running F product into this depth's workspace
        auto& cur = (*w.fprod)[std::size_t(depth)];
        const auto& row = w.tab->F[i];
        if (depth == 0) {
            cur = row;
        } else {
            const auto& prev = (*w.fprod)[std::size_t(depth - 1)];
            for (std::size_t q = 0; q < cur.size(); ++q) cur[q] = prev[q] * row[q];
        }
        const double melems = mult_elems * double(w.tab->mults[i]);
        if (rem == 1) {
            CompensatedSumC acc;
            const auto& a = *w.Ak;
            for (std::size_t q = 0; q < cur.size(); ++q) acc.add(a[q] * cur[q]);
            const double nested = w.sign_over_pik * acc.result().imag();
            const double orderings = (*w.fact)[std::size_t(w.k)] / denom;
            *w.term += w.prefac * orderings * melems * nested;
            ++(*w.n_eval);
        } else {
            tuple_dfs(w, i, depth + 1, envP * env_i, melems, reps, denom, i);
        }
    }
}

}  // namespace detail

// D_k for k = 1..k_max: (-beta/(2 pi sqrt 2))^k times the sum over ordered
// k-tuples of orbit elements of the nested kernel integrals of g_{beta,k}.
// Evaluated by integrating the contour variable last, so each axis collapses
// to a precomputed F row; tuples whose envelope cannot reach the tolerance
// are pruned into a certified tail.
inline DiffractiveResult diffractive_sum(const TestFunction& h, const CouplingContext& ctx,
                                         const OrbitSpectrum& orbit, int k_max, double nu,
                                         const SigmaSelection& sel) {
    if (k_max < 1 || k_max > 12)
        throw std::invalid_argument("diffractive_sum: k_max must be in [1, 12]");
    if (!(sel.ratio < 1.0))
        throw std::invalid_argument("diffractive_sum: series ratio " + fmt_g17(sel.ratio) +
                                    " >= 1, refusing to sum");
    DiffractiveResult res;
    res.ratio = sel.ratio;
    res.terms.assign(std::size_t(k_max), 0.0);
    res.tuple_tails.assign(std::size_t(k_max), 0.0);
    res.quad_errs.assign(std::size_t(k_max), 0.0);
    const double H1 = contour_abs_hp(h, sel.sigma);
    res.series_tail = H1 / (two_pi * double(k_max + 1)) *
                      std::pow(sel.ratio, k_max + 1) / (1.0 - sel.ratio);
    if (orbit.lengths.empty()) return res;

    const double l_max = orbit.lengths.back().length;
    const double freq_max = double(k_max) * l_max + 41.0 / sel.sigma + 6.0;
    const double floor = std::abs(ctx.beta) * sel.v_min;

    std::vector<double> fact(std::size_t(k_max) + 1, 1.0);
    for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * double(i);

    auto run_pass = [&](double width_scale, std::vector<double>& terms_out,
                        std::vector<double>& tails_out, long& n_eval, long& n_pruned) {
        ContourTable tab =
            make_contour_table(ctx, h, &orbit, nu, sel.sigma, freq_max, width_scale);
        const std::size_t n = tab.nodes.x.size();
        std::vector<double> env(tab.lengths.size()), env_suffix(tab.lengths.size() + 1, 0.0);
        for (std::size_t i = 0; i < tab.lengths.size(); ++i)
            env[i] = double(tab.mults[i]) * exp_weight_integral(tab.lengths[i], sel.sigma);
        for (std::size_t i = tab.lengths.size(); i-- > 0;)
            env_suffix[i] = env_suffix[i + 1] + env[i];

        std::vector<cplx> Ak(n);
        for (std::size_t q = 0; q < n; ++q) Ak[q] = tab.nodes.w[q] * tab.hp[q];
        std::vector<std::vector<cplx>> fprod;
        fprod.assign(std::size_t(k_max), std::vector<cplx>(n));
        for (int k = 1; k <= k_max; ++k) {
            for (std::size_t q = 0; q < n; ++q) Ak[q] /= tab.u[q];
            const double Mk = H1 / (two_pi * double(k) * std::pow(floor, k));
            const double prefac =
                std::pow(-ctx.beta / (two_pi * std::sqrt(2.0)), k);
            const double scale_k =
                std::abs(prefac) * Mk * std::pow(env_suffix[0], k);
            detail::TupleWork w;
            w.tab = &tab;
            w.Ak = &Ak;
            w.prefac = prefac;
            w.sign_over_pik = ((k % 2 == 0) ? 1.0 : -1.0) / (pi * double(k));
            w.k = k;
            w.Mk = Mk;
            w.env = &env;
            w.env_suffix = &env_suffix;
            w.prune_tol = 1e-18 * scale_k;
            w.term = &terms_out[std::size_t(k - 1)];
            w.tail = &tails_out[std::size_t(k - 1)];
            w.n_eval = &n_eval;
            w.n_pruned = &n_pruned;
            w.fprod = &fprod;
            w.fact = &fact;
            detail::tuple_dfs(w, 0, 0, 1.0, 1.0, 0, 1.0, SIZE_MAX);
        }
    };

    run_pass(1.0, res.terms, res.tuple_tails, res.tuples_evaluated, res.tuples_pruned);
    std::vector<double> coarse(std::size_t(k_max), 0.0), coarse_tails(std::size_t(k_max), 0.0);
    long ce = 0, cp = 0;
    run_pass(1.6, coarse, coarse_tails, ce, cp);
    for (int k = 0; k < k_max; ++k)
        res.quad_errs[std::size_t(k)] = std::abs(res.terms[std::size_t(k)] -
                                                 coarse[std::size_t(k)]);
    return res;
}

// Independent evaluation of a single D_k by the nested-product route: per-axis
// t = l + u^2 substitution against an interpolated g_{beta,k}.  Quadratically
// more work per tuple, so restricted to small k; used as the cross-check for
// the contour-factorized route.
inline double diffractive_k_nested(const TestFunction& h, const CouplingContext& ctx,
                                   const OrbitSpectrum& orbit, int k, double nu,
                                   const SigmaSelection& sel) {
    if (k < 1 || k > 2)
        throw std::invalid_argument("diffractive_k_nested: supported for k in {1, 2}");
    if (orbit.lengths.empty()) return 0.0;
    const double l_max = orbit.lengths.back().length;
    GTransformSet set = make_transform_set(h, ctx, sel, nu, k,
                                           double(k) * l_max + 41.0 / sel.sigma + 6.0);
    const double t_ax = set.tab.t_ax;
    const double t_lo = double(k) * orbit.tau0;
    const double t_hi = double(k) * (l_max + t_ax) + 1.0;
    GSpline gs = build_g_spline(set, k, std::max(1e-3, 0.9 * t_lo), t_hi);

    // frequency scale of g in t, for axis panel counts
    double mean_freq = 0.0, mass = 0.0;
    for (std::size_t q = 0; q < set.tab.nodes.x.size(); ++q) {
        const double m = std::abs(set.A[std::size_t(k - 1)][q]);
        mean_freq += m * set.tab.nodes.x[q];
        mass += m;
    }
    mean_freq = mass > 0.0 ? mean_freq / mass : 1.0;
    const int pan = int(std::ceil(3.0 * mean_freq * t_ax / (two_pi * 2.5))) + 3;

    auto axis_nodes = [&](double l, std::vector<double>& un, std::vector<double>& uw) {
        un.clear();
        uw.clear();
        for (int p = 0; p < pan; ++p) {
            const double ta = t_ax * double(p) / pan, tb = t_ax * double(p + 1) / pan;
            const double a = std::sqrt(ta), b = std::sqrt(tb);
            const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
            for (int j = 0; j < 8; ++j) {
                for (double sgn : {-1.0, 1.0}) {
                    const double uu = c + sgn * hw * gl16_x[j];
                    un.push_back(uu);
                    uw.push_back(hw * gl16_w[j] * 2.0 * uu /
                                 std::sqrt(detail::cosh_diff(l, uu * uu)));
                }
            }
        }
    };

    const double prefac = std::pow(-ctx.beta / (two_pi * std::sqrt(2.0)), k);
    CompensatedSum total;
    std::vector<double> un1, uw1, un2, uw2;
    for (std::size_t i = 0; i < orbit.lengths.size(); ++i) {
        const double li = orbit.lengths[i].length;
        const double mi = double(orbit.lengths[i].mult);
        axis_nodes(li, un1, uw1);
        if (k == 1) {
            CompensatedSum acc;
            for (std::size_t a = 0; a < un1.size(); ++a)
                acc.add(uw1[a] * gs(li + un1[a] * un1[a]));
            total.add(prefac * mi * acc.result());
            continue;
        }
        for (std::size_t j = i; j < orbit.lengths.size(); ++j) {
            const double lj = orbit.lengths[j].length;
            const double mj = double(orbit.lengths[j].mult);
            axis_nodes(lj, un2, uw2);
            CompensatedSum acc;
            for (std::size_t a = 0; a < un1.size(); ++a) {
                const double ta = li + un1[a] * un1[a];
                double inner = 0.0;
                for (std::size_t b = 0; b < un2.size(); ++b)
                    inner += uw2[b] * gs(ta + lj + un2[b] * un2[b]);
                acc.add(uw1[a] * inner);
            }
            const double orderings = (i == j) ? 1.0 : 2.0;
            total.add(prefac * orderings * mi * mj * acc.result());
        }
    }
    return total.result();
}

// ---- pretrace (geometric-mode contour integral) -------------------------------

// -(1/(2 pi i)) Int_{Im rho = -sigma} h'(rho) log(beta S(1/2+i rho)) drho.
// The beta-normalization log(beta S) = log(u + beta O) shifts the integrand by
// a constant whose h' integral vanishes, and keeps the anchor real-positive as
// beta -> 0.  The principal branch is tracked node to node from the far left.
inline QuadValue pretrace_rhs(const TestFunction& h, const CouplingContext& ctx,
                              const OrbitSpectrum& orbit, double sigma) {
    if (ctx.beta == 0.0)
        throw std::invalid_argument("pretrace_rhs: beta = 0 has no geometric S");
    if (!(sigma > 0.5 + tol::green_margin))
        throw std::invalid_argument("pretrace_rhs: sigma must exceed 1/2");
    const double v_beta = denom_zero(ctx.m, ctx.beta).v;
    if (sigma <= v_beta)
        throw std::invalid_argument("pretrace_rhs: sigma below the denominator zero " +
                                    fmt_g17(v_beta));
    const double tau_max = orbit.lengths.empty() ? 1.0 : orbit.lengths.back().length;

    auto run = [&](double width_scale, double* err_out) {
        ContourTable tab =
            make_contour_table(ctx, h, &orbit, sigma, sigma, tau_max + 4.0, width_scale);
        const std::size_t n = tab.nodes.x.size();
        std::vector<cplx> W(n);
        for (std::size_t q = 0; q < n; ++q) {
            const cplx O = table_orbit_value(tab, q);
            W[q] = tab.u[q] + ctx.beta * O;
            // series domination at every node: |beta O / u| < 1
            if (!(std::abs(ctx.beta * O / tab.u[q]) < 1.0))
                throw std::runtime_error(
                    "pretrace_rhs: orbit term dominates the denominator at Re rho = " +
                    fmt_g17(tab.nodes.x[q]));
        }
        // Full line: values at -x are conjugates; track the branch left to
        // right.  The anchor takes the principal argument at the far-left
        // node; any constant 2 pi i ambiguity integrates against h' to a
        // boundary term that vanishes at the symmetric cutoff.
        CompensatedSumC integral;
        CompensatedSum err_acc;
        cplx panel_err;
        std::size_t in_panel = 0;
        double theta_prev = 0.0;
        bool first = true;
        cplx w_prev;
        auto visit = [&](std::size_t q, bool mirror) {
            const cplx w = mirror ? std::conj(W[q]) : W[q];
            double theta;
            if (first) {
                theta = std::arg(w);
                first = false;
            } else {
                const double dtheta = std::arg(w / w_prev);
                if (std::abs(dtheta) > 2.5)
                    throw std::runtime_error(
                        "pretrace_rhs: arg step " + fmt_g17(dtheta) +
                        " between adjacent nodes; finer contour resolution needed");
                theta = theta_prev + dtheta;
            }
            theta_prev = theta;
            w_prev = w;
            const cplx hp = mirror ? -std::conj(tab.hp[q]) : tab.hp[q];
            const cplx val = hp * cplx(std::log(std::abs(w)), theta);
            integral.add(tab.nodes.w[q] * val);
            panel_err += tab.nodes.werr[q] * val;
            if (++in_panel == tab.nodes.per_panel) {
                err_acc.add(std::abs(panel_err));
                panel_err = cplx(0.0, 0.0);
                in_panel = 0;
            }
        };
        for (std::size_t q = n; q-- > 0;) visit(q, true);
        for (std::size_t q = 0; q < n; ++q) visit(q, false);
        const cplx P = -integral.result() / (two_pi * cplx(0.0, 1.0));
        if (err_out)
            *err_out = err_acc.result() / two_pi +
                       tab.spec.cutoff_err * (std::abs(std::log(std::abs(W[n - 1]))) + 1.0);
        return P;
    };

    double err_fine = 0.0;
    const cplx fine = run(1.0, &err_fine);
    const cplx coarse = run(1.7, nullptr);
    QuadValue out;
    out.value = fine.real();
    out.imag_residual = std::abs(fine.imag());
    out.quad_err = std::max(err_fine, std::abs(fine - coarse));
    return out;
}

// Folded variant: integrates Re rho >= 0 only and doubles, valid while the
// principal branch never winds.  Compared against the full-line value in tests.
inline double pretrace_rhs_folded(const TestFunction& h, const CouplingContext& ctx,
                                  const OrbitSpectrum& orbit, double sigma) {
    if (ctx.beta == 0.0)
        throw std::invalid_argument("pretrace_rhs_folded: beta = 0 has no geometric S");
    const double tau_max = orbit.lengths.empty() ? 1.0 : orbit.lengths.back().length;
    ContourTable tab = make_contour_table(ctx, h, &orbit, sigma, sigma, tau_max + 4.0);
    CompensatedSum integral;
    for (std::size_t q = 0; q < tab.nodes.x.size(); ++q) {
        const cplx W = tab.u[q] + ctx.beta * table_orbit_value(tab, q);
        const cplx L(std::log(std::abs(W)), std::arg(W));
        if (std::abs(L.imag()) > pi - 0.05)
            throw std::runtime_error("pretrace_rhs_folded: branch near the cut, "
                                     "use the full-line evaluation");
        integral.add(tab.nodes.w[q] * (tab.hp[q] * L).imag());
    }
    // -(1/2pi i) * (2 i Im Int) = -(1/pi) Im Int
    return -integral.result() / pi;
}

// ---- spectral side -------------------------------------------------------------

// Sum_j [h(rho_j^alpha) - h(rho_j)] over coherently paired zeros and visible
// poles, with a decay-envelope estimate for the omitted tail.
inline ValueWithTail<double> spectral_side(const TestFunction& h, const Spectrum& spec,
                                           const PerturbedSpectrum& pert) {
    const auto poles = detail::visible_poles(spec);
    std::vector<double> zl;
    for (const auto& z : pert.new_eigs) zl.push_back(z.lambda);
    std::size_t np = 0;
    while (np < poles.size() && poles[np].lambda <= pert.lambda_max) ++np;
    if (zl.size() + 1 < np || zl.size() > np + 1)
        throw std::invalid_argument(
            "spectral_side: mismatched truncation (" + std::to_string(zl.size()) +
            " zeros vs " + std::to_string(np) + " visible poles below lambda_max)");
    const std::size_t pairs = std::min(zl.size(), np);
    CompensatedSum acc;
    for (std::size_t i = 0; i < pairs; ++i) {
        const cplx rz = rho_of_lambda(zl[i]), rp = rho_of_lambda(poles[i].lambda);
        if (std::abs(rz.imag()) >= h.sigma || std::abs(rp.imag()) >= h.sigma)
            throw std::invalid_argument("spectral_side: eigenvalue rho outside the "
                                        "analyticity strip of h");
        acc.add(h.h(rz).real() - h.h(rp).real());
    }
    // tail: |h(rho^a) - h(rho)| <= |h'| * gap, gap ~ mean Weyl gap in rho
    const double rho_end = rho_of_lambda(pert.lambda_max).real();
    const double r2 = std::max(4.0 * rho_end, rho_end + 40.0);
    auto habs = [&](double r) { return std::abs(h.hp(cplx(r, 0.0))); };
    double tail = integrate_gk15<double>(habs, std::max(rho_end, 1e-3), r2, 1e-14, 1e-9, 4000);
    tail += habs(r2) * r2 / (1.0 + h.delta);
    tail *= 1.0 + 2.0 / std::max(1.0, rho_end);  // rho-gap times density is O(1)
    return {acc.result(), tail};
}

// ---- truncated residue check ----------------------------------------------------

struct TruncResult {
    double lhs = 0.0, rhs = 0.0, gap = 0.0;
    long zeros_inside = 0, poles_inside = 0;
    double quad_err = 0.0;
};

// Prop.-style check on the box B(T) = {|Re rho| < T, |Im rho| < sigma}:
// 2 * (sum of h over zeros - sum over poles, both sign pairs) against the
// contour integral of h S'/S over the bottom and right edges (doubled by
// symmetry).  S in spectral form.
inline TruncResult truncated_check(const TestFunction& h, const CouplingContext& ctx,
                                   const Spectrum& spec, const PerturbedSpectrum& pert,
                                   double T, double sigma) {
    if (!(sigma > 0.5)) throw std::invalid_argument("truncated_check: sigma must exceed 1/2");
    if (!(T > 0.0)) throw std::invalid_argument("truncated_check: T must be positive");
    if (sigma >= h.sigma)
        throw std::invalid_argument("truncated_check: sigma exceeds the strip of h");
    const double clearance = 1e-4;

    // collect singularities of S as rho points (zeros positive, poles negative)
    struct Pt { cplx rho; int sgn; double lambda; };
    std::vector<Pt> pts;
    for (const auto& p : detail::visible_poles(spec))
        pts.push_back({rho_of_lambda(p.lambda), -1, p.lambda});
    for (const auto& z : pert.new_eigs)
        pts.push_back({rho_of_lambda(z.lambda), +1, z.lambda});

    TruncResult res;
    for (const auto& p : pts) {
        const double re = p.rho.real(), im = p.rho.imag();
        if (std::abs(std::abs(re) - T) < clearance ||
            std::abs(std::abs(im) - sigma) < clearance)
            throw std::invalid_argument(
                "truncated_check: boundary within " + fmt_g17(clearance) +
                " of the S-singularity at lambda = " + fmt_g17(p.lambda));
        if (std::abs(re) < T && std::abs(im) < sigma) {
            res.lhs += 2.0 * double(p.sgn) * h.h(p.rho).real();
            (p.sgn > 0 ? res.zeros_inside : res.poles_inside) += 1;
        }
    }

    auto slog = [&](cplx rho) -> cplx {
        const cplx lam = 0.25 + rho * rho;
        return s_prime_spectral_rho_raw(spec, rho) / s_spectral_raw(ctx, spec, lam);
    };
    double err_b = 0.0, err_r = 0.0;
    auto fb = [&](double x) -> cplx {
        const cplx rho(x, -sigma);
        return h.h(rho) * slog(rho);
    };
    auto fr = [&](double y) -> cplx {
        const cplx rho(T, y);
        return h.h(rho) * slog(rho) * cplx(0.0, 1.0);
    };
    const cplx bottom = integrate_gk15<cplx>(fb, -T, T, 1e-11, 1e-11, 40000, &err_b);
    const cplx right = integrate_gk15<cplx>(fr, -sigma, sigma, 1e-11, 1e-11, 40000, &err_r);
    const cplx total = (bottom + right) / (pi * cplx(0.0, 1.0));
    res.rhs = total.real();
    res.quad_err = (err_b + err_r) / pi + std::abs(total.imag());
    res.gap = std::abs(res.lhs - res.rhs);
    return res;
}

// ---- assembled geometric self-consistency check ---------------------------------

struct GeometricCheck {
    SigmaSelection sel;
    double nu = 0.0;
    QuadValue identity;
    DiffractiveResult diff;
    QuadValue rhs;
    double lhs = 0.0;
    double gap = 0.0;
    double tails = 0.0;
    bool converged = false;
};

// pretrace_rhs vs identity_term + Sum_k D_k at an explicitly chosen contour
// pair.  The selection must already satisfy the series ratio test; callers
// that override sigma or nu are responsible for refreshing sel's envelope
// fields at the new height (diffractive_sum re-checks the ratio).
inline GeometricCheck geometric_check_at(const TestFunction& h, const CouplingContext& ctx,
                                         const OrbitSpectrum& orbit, int k_max,
                                         const SigmaSelection& sel, double nu) {
    GeometricCheck out;
    out.sel = sel;
    if (out.sel.sigma >= h.sigma)
        throw std::invalid_argument("geometric_check: selected sigma " +
                                    fmt_g17(out.sel.sigma) +
                                    " reaches outside the strip of h");
    out.nu = nu;
    out.identity = identity_term(h, ctx, out.nu);
    out.diff = diffractive_sum(h, ctx, orbit, k_max, out.nu, out.sel);
    out.rhs = pretrace_rhs(h, ctx, orbit, out.sel.sigma);
    CompensatedSum lhs;
    lhs.add(out.identity.value);
    for (double d : out.diff.terms) lhs.add(d);
    out.lhs = lhs.result();
    out.gap = std::abs(out.rhs.value - out.lhs);
    double tails = out.diff.series_tail + out.identity.quad_err + out.rhs.quad_err +
                   out.rhs.imag_residual + out.identity.imag_residual;
    for (double t : out.diff.tuple_tails) tails += t;
    for (double e : out.diff.quad_errs) tails += e;
    out.tails = tails;
    out.converged = out.gap <= tails + 1e-12;
    return out;
}

// pretrace_rhs vs identity_term + Sum_k D_k on the same truncated orbit.
inline GeometricCheck geometric_check(const TestFunction& h, const CouplingContext& ctx,
                                      const OrbitSpectrum& orbit, int k_max,
                                      double rho0_im = 0.0) {
    const SigmaSelection sel = select_sigma(ctx, orbit, rho0_im);
    return geometric_check_at(h, ctx, orbit, k_max, sel, select_nu(ctx, sel.sigma));
}

// ---- run report -------------------------------------------------------------------

// Everything a trace run reports; the geometric block is filled in geometric
// mode, the spectral block when eigenvalue data participates.
struct TraceReport {
    std::string mode;  // "geometric" or "truncated"
    double alpha_inv = 0.0;
    double beta = 0.0;
    std::string convention;
    double c0 = 0.0, c0_tail = 0.0;
    double sigma = 0.0, nu = 0.0;
    int k_max = 0;
    bool has_spectral_side = false;
    double spectral_value = 0.0, spectral_tail = 0.0;
    double identity = 0.0;
    std::vector<double> diffractive;
    double pretrace = 0.0;
    double lhs = 0.0, rhs = 0.0;
    double tails = 0.0, gap = 0.0;
    bool converged = false;
};

inline TraceReport make_report(const CouplingContext& ctx, const GeometricCheck& chk,
                               int k_max) {
    TraceReport r;
    r.mode = "geometric";
    r.alpha_inv = ctx.alpha_inv;
    r.beta = ctx.beta;
    r.convention = to_string(ctx.convention);
    r.c0 = ctx.c0;
    r.c0_tail = ctx.c0_tail;
    r.sigma = chk.sel.sigma;
    r.nu = chk.nu;
    r.k_max = k_max;
    r.identity = chk.identity.value;
    r.diffractive = chk.diff.terms;
    r.pretrace = chk.rhs.value;
    r.lhs = chk.lhs;
    r.rhs = chk.rhs.value;
    r.tails = chk.tails;
    r.gap = chk.gap;
    r.converged = chk.converged;
    return r;
}

// ---- diagnostics ------------------------------------------------------------------

// Int over the segment [T - i sigma, T] of |log |S|| |drho|, scaled by T^(2+eps).
inline double compbound_diagnostic(const CouplingContext& ctx, const Spectrum& spec,
                                   double T, double sigma, double eps) {
    if (!(T > 1.0)) throw std::invalid_argument("compbound_diagnostic: T must exceed 1");
    auto f = [&](double y) {
        const cplx rho(T, -y);
        return std::abs(std::log(std::abs(s_spectral_raw(ctx, spec, 0.25 + rho * rho))));
    };
    const double v = integrate_gk15<double>(f, 0.0, sigma, 1e-10, 1e-9, 20000);
    return v / std::pow(T, 2.0 + eps);
}

}  // namespace pscatter
