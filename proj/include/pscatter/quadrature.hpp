// pscatter: quadrature engines -- adaptive Gauss-Kronrod 7/15, composite
// Gauss-Legendre panels, Romberg.  All engines are deterministic.
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pscatter/common.hpp"

namespace pscatter {

// Gauss 7 / Kronrod 15 node-weight table on [-1,1] (positive half; node 0 first).
// Columns: abscissa, Gauss weight (0 when Kronrod-only), Kronrod weight.
inline constexpr double gk15_table[8][3] = {
    {0.000000000000000000, 0.417959183673469388, 0.209482141084727828},
    {0.405845151377397167, 0.381830050505118945, 0.190350578064785410},
    {0.741531185599394440, 0.279705391489276668, 0.140653259715525919},
    {0.949107912342758525, 0.129484966168869693, 0.063092092629978553},
    {0.207784955007898468, 0.0,                  0.204432940075298892},
    {0.586087235467691130, 0.0,                  0.169004726639267903},
    {0.864864423359769073, 0.0,                  0.104790010322250184},
    {0.991455371120812639, 0.0,                  0.022935322010529225},
};

namespace detail {
inline double gk_norm(double x) { return std::abs(x); }
inline double gk_norm(const cplx& z) { return std::abs(z); }
}

// One GK15 panel on [a,b]; err receives the usual |G7-K15| based estimate.
template <class T, class Fn>
T gk15_panel(Fn&& f, double a, double b, double& err) {
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    T y0 = f(mid);
    T g7 = gk15_table[0][1] * y0;
    T k15 = gk15_table[0][2] * y0;
    for (int i = 1; i < 8; ++i) {
        double dx = hw * gk15_table[i][0];
        T yi = f(mid + dx) + f(mid - dx);
        g7 = g7 + gk15_table[i][1] * yi;
        k15 = k15 + gk15_table[i][2] * yi;
    }
    g7 = g7 * hw;
    k15 = k15 * hw;
    double d = detail::gk_norm(g7 - k15);
    err = 200.0 * d * std::sqrt(std::max(d, 0.0));
    return k15;
}

// Adaptive bisection on a stack of panels.  Aims for sum of panel errors
// below max(abs_tol, rel_tol*|I|).
template <class T, class Fn>
T integrate_gk15(Fn&& f, double a, double b, double abs_tol = 1e-12,
                 double rel_tol = 1e-12, int max_panels = 4000,
                 double* err_out = nullptr) {
    struct Seg { double a, b, err; T val; };
    double e0;
    std::vector<Seg> segs{{a, b, 0.0, T{}}};
    segs[0].val = gk15_panel<T>(f, a, b, e0);
    segs[0].err = e0;
    int used = 1;
    while (true) {
        // locate the worst panel and current totals
        double total_err = 0.0;
        double total_mag = 0.0;
        int worst = -1;
        double worst_err = 0.0;
        for (int i = 0; i < (int)segs.size(); ++i) {
            total_err += segs[i].err;
            total_mag += detail::gk_norm(segs[i].val);
            if (segs[i].err > worst_err) { worst_err = segs[i].err; worst = i; }
        }
        if (total_err <= std::max(abs_tol, rel_tol * total_mag) || worst < 0)
            break;
        if (used >= max_panels)
            throw std::runtime_error("integrate_gk15: panel budget exhausted");
        Seg s = segs[worst];
        double m = 0.5 * (s.a + s.b);
        if (!(m > s.a && m < s.b))  // interval collapsed to rounding
            break;
        Seg left{s.a, m, 0.0, T{}}, right{m, s.b, 0.0, T{}};
        left.val = gk15_panel<T>(f, left.a, left.b, left.err);
        right.val = gk15_panel<T>(f, right.a, right.b, right.err);
        segs[worst] = left;
        segs.push_back(right);
        ++used;
    }
    CompensatedSum sre, sim;
    double errs = 0.0;
    for (auto& s : segs) {
        if constexpr (std::is_same_v<T, cplx>) {
            sre.add(s.val.real());
            sim.add(s.val.imag());
        } else {
            sre.add(s.val);
        }
        errs += s.err;
    }
    if (err_out) *err_out = errs;
    if constexpr (std::is_same_v<T, cplx>)
        return {sre.result(), sim.result()};
    else
        return T(sre.result());
}

// ---- composite Gauss-Legendre -------------------------------------------

// 16-point Gauss-Legendre abscissae/weights on [-1,1] (positive half).
inline constexpr double gl16_x[8] = {
    0.095012509837637440185, 0.281603550779258913230,
    0.458016777657227386342, 0.617876244402643748447,
    0.755404408355003033895, 0.865631202387831743880,
    0.944575023073232576078, 0.989400934991649932596,
};
inline constexpr double gl16_w[8] = {
    0.189450610455068496285, 0.182603415044923588867,
    0.169156519395002538189, 0.149595988816576732081,
    0.124628971255533872052, 0.095158511682492784810,
    0.062253523938647892863, 0.027152459411754094852,
};

// Fixed GL16 rule on [a,b].
template <class T, class Fn>
T gl16_panel(Fn&& f, double a, double b) {
    const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
    T acc{};
    for (int i = 0; i < 8; ++i) {
        double dx = hw * gl16_x[i];
        acc = acc + gl16_w[i] * (f(mid + dx) + f(mid - dx));
    }
    return acc * hw;
}

// Panel layout for a semi-infinite smooth integrand: geometric growth of
// panel widths from `first_width`, stopping once `stop(x)` says the remainder
// is negligible.
struct PanelLayout {
    std::vector<double> edges;
};

inline PanelLayout geometric_panels(double a, double first_width, double growth,
                                    double b_max) {
    PanelLayout p;
    p.edges.push_back(a);
    double w = first_width, x = a;
    while (x < b_max) {
        x = std::min(b_max, x + w);
        p.edges.push_back(x);
        w *= growth;
    }
    return p;
}

inline PanelLayout uniform_panels(double a, double b, double width) {
    PanelLayout p;
    int n = std::max(1, (int)std::ceil((b - a) / width));
    p.edges.reserve(n + 1);
    for (int i = 0; i <= n; ++i) p.edges.push_back(a + (b - a) * i / n);
    return p;
}

template <class T, class Fn>
T integrate_panels(Fn&& f, const PanelLayout& p) {
    CompensatedSum re, im;
    for (std::size_t i = 0; i + 1 < p.edges.size(); ++i) {
        T v = gl16_panel<T>(f, p.edges[i], p.edges[i + 1]);
        if constexpr (std::is_same_v<T, cplx>) {
            re.add(v.real());
            im.add(v.imag());
        } else {
            re.add(v);
        }
    }
    if constexpr (std::is_same_v<T, cplx>)
        return {re.result(), im.result()};
    else
        return T(re.result());
}

// ---- Romberg (trapezoid + Richardson) ------------------------------------

// Independent scheme used as the cross-check for the Gauss-Kronrod path.
template <class T, class Fn>
T romberg(Fn&& f, double a, double b, double rel_tol = 1e-11, int max_level = 22) {
    std::vector<T> row, prev;
    T t = 0.5 * (b - a) * (f(a) + f(b));
    prev.push_back(t);
    std::size_t n = 1;
    for (int k = 1; k <= max_level; ++k) {
        // refine trapezoid
        double h = (b - a) / double(2 * n);
        T add{};
        for (std::size_t i = 0; i < n; ++i) add = add + f(a + h * double(2 * i + 1));
        t = 0.5 * prev[0] + h * add;
        n *= 2;
        row.assign(1, t);
        double p4 = 4.0;
        for (std::size_t j = 1; j <= prev.size(); ++j) {
            row.push_back(row[j - 1] + (row[j - 1] - prev[j - 1]) / (p4 - 1.0));
            p4 *= 4.0;
        }
        if (k >= 4) {
            double diff = detail::gk_norm(row.back() - prev.back());
            double scale = std::max(detail::gk_norm(row.back()), 1e-300);
            if (diff <= rel_tol * scale) return row.back();
        }
        prev = row;
    }
    return prev.back();
}

}  // namespace pscatter
