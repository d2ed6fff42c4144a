// pscatter: upper half-plane geometry and PSL(2,R) actions.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "pscatter/common.hpp"

namespace pscatter {

// Point x + iy of the upper half-plane, metric ds^2 = (dx^2 + dy^2)/y^2.
struct HPoint {
    double x = 0.0;
    double y = 1.0;

    HPoint() = default;
    HPoint(double x_, double y_) : x(x_), y(y_) {
        if (!(y > 0.0) || !std::isfinite(x) || !std::isfinite(y))
            throw std::invalid_argument("HPoint: requires finite x and y > 0");
    }
};

// acosh(1+u) with a series guard for tiny u, where the naive formula loses
// all significant digits.
inline double acosh1p(double u) {
    if (u < 0.0) {
        if (u > -1e-14) return 0.0;  // rounding noise from the distance formula
        throw std::domain_error("acosh1p: negative argument");
    }
    if (u < 1e-6)
        return std::sqrt(2.0 * u) * (1.0 - u / 12.0 + 3.0 * u * u / 160.0);
    return std::acosh(1.0 + u);
}

// Geodesic distance: cosh d(z,w) = 1 + |z-w|^2 / (2 Im z Im w).
inline double dist(const HPoint& z, const HPoint& w) {
    double dx = z.x - w.x, dy = z.y - w.y;
    double u = (dx * dx + dy * dy) / (2.0 * z.y * w.y);
    return acosh1p(u);
}

// Real Moebius map z -> (az+b)/(cz+d), kept PSL(2,R)-normalized: det = 1 and
// the first nonzero entry of (a,b,c,d) positive, so each group element has a
// unique representative.
struct MoebiusMap {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    MoebiusMap() = default;
    MoebiusMap(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {
        double det = a * d - b * c;
        if (!std::isfinite(det) || det <= 0.0)
            throw std::invalid_argument("MoebiusMap: determinant must be positive");
        if (std::abs(det - 1.0) > tol::det_tol)
            throw std::invalid_argument("MoebiusMap: |det - 1| = " + fmt_g17(std::abs(det - 1.0)) +
                                        " exceeds tolerance " + fmt_g17(tol::det_tol));
        // Renormalize unless det is already 1 to rounding; the guard makes
        // construction idempotent, so entries survive text round trips intact.
        if (std::abs(det - 1.0) > 32.0 * std::numeric_limits<double>::epsilon()) {
            double s = 1.0 / std::sqrt(det);
            a *= s; b *= s; c *= s; d *= s;
        }
        normalize_sign();
    }

    void normalize_sign() {
        double lead = a;
        if (lead == 0.0) lead = b;
        if (lead == 0.0) lead = c;
        if (lead == 0.0) lead = d;
        if (lead < 0.0) { a = -a; b = -b; c = -c; d = -d; }
    }

    bool is_identity(double eps = tol::psl_quantum) const {
        return std::abs(a - 1.0) <= eps && std::abs(b) <= eps &&
               std::abs(c) <= eps && std::abs(d - 1.0) <= eps;
    }

    double trace() const { return a + d; }

    HPoint apply(const HPoint& z) const {
        // w = (az+b)/(cz+d); the imaginary part simplifies to y/|cz+d|^2
        double cr = c * z.x + d, ci = c * z.y;
        double den = cr * cr + ci * ci;
        if (den <= 0.0 || !std::isfinite(den))
            throw std::domain_error("MoebiusMap::apply: map degenerates at this point");
        double ar = a * z.x + b, ai = a * z.y;
        double wx = (ar * cr + ai * ci) / den;
        double wy = z.y / den;  // uses det = 1
        return HPoint(wx, wy);
    }

    MoebiusMap compose(const MoebiusMap& g) const {  // this o g
        MoebiusMap r;
        r.a = a * g.a + b * g.c;
        r.b = a * g.b + b * g.d;
        r.c = c * g.a + d * g.c;
        r.d = c * g.b + d * g.d;
        r.normalize_sign();
        return r;
    }

    MoebiusMap inverse() const {
        MoebiusMap r;
        r.a = d; r.b = -b; r.c = -c; r.d = a;
        r.normalize_sign();
        return r;
    }

    // quantized key for hash-based PSL dedup
    struct Key {
        std::int64_t qa, qb, qc, qd;
        bool operator==(const Key&) const = default;
    };
    Key key(double quantum = tol::psl_quantum) const {
        auto q = [quantum](double v) {
            return (std::int64_t)std::llround(v / quantum);
        };
        return Key{q(a), q(b), q(c), q(d)};
    }
};

struct MoebiusKeyHash {
    std::size_t operator()(const MoebiusMap::Key& k) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](std::int64_t v) {
            h ^= (std::uint64_t)v;
            h *= 0x100000001b3ULL;
            h ^= h >> 29;
        };
        mix(k.qa); mix(k.qb); mix(k.qc); mix(k.qd);
        return (std::size_t)h;
    }
};

// displacement of the base point under the map
inline double displacement(const MoebiusMap& g, const HPoint& z0) {
    return dist(z0, g.apply(z0));
}

}  // namespace pscatter
