// Reference groups used across the test suite, constructed in code so file
// parsing stays an independent concern.
#pragma once

#include <cmath>

#include "pscatter/fuchsian.hpp"
#include "pscatter/hyperbolic.hpp"

namespace testgroups {

// Cyclic hyperbolic group: one diagonal generator translating the imaginary
// axis by l, base point on the axis.  Orbit lengths are exactly k*l with
// multiplicity 2 (the element and its inverse).
inline pscatter::GroupSpec cyclic(double l = 1.25) {
    pscatter::GroupSpec g;
    g.label = "cyclic_l" + pscatter::fmt_g17(l);
    g.z0 = pscatter::HPoint(0.0, 1.0);
    g.generators = {pscatter::MoebiusMap(std::exp(0.5 * l), 0.0, 0.0, std::exp(-0.5 * l))};
    return g;
}

// Order-2 rotation about i.  With z0 = i the whole group stabilizes the base
// point; off-center base points see a single orbit element.
inline pscatter::GroupSpec elliptic_order2(pscatter::HPoint z0 = pscatter::HPoint(0.0, 1.0)) {
    pscatter::GroupSpec g;
    g.label = "elliptic_order2";
    g.z0 = z0;
    g.generators = {pscatter::MoebiusMap(0.0, 1.0, -1.0, 0.0)};
    return g;
}

// Genus-2 octagon group: gamma_0 = [[1+sqrt2, sqrt(2+2 sqrt2)], [same, 1+sqrt2]]
// conjugated by rotations about i through k pi/8, k = 0..3.  The base point i
// is the octagon center; the four generators and inverses all translate it by
// the systole 2 acosh(1 + sqrt 2).
inline pscatter::GroupSpec octagon() {
    using pscatter::MoebiusMap;
    const double sq2 = std::sqrt(2.0);
    const double a = 1.0 + sq2;
    const double b = std::sqrt(2.0 + 2.0 * sq2);
    const MoebiusMap g0(a, b, b, a);
    pscatter::GroupSpec g;
    g.label = "octagon";
    g.z0 = pscatter::HPoint(0.0, 1.0);
    for (int k = 0; k < 4; ++k) {
        // half-angle k pi/8 rotates the tangent plane at i by k pi/4
        const double th = double(k) * pscatter::pi / 8.0;
        const MoebiusMap rot(std::cos(th), std::sin(th), -std::sin(th), std::cos(th));
        g.generators.push_back(rot.compose(g0).compose(rot.inverse()));
    }
    return g;
}

// Rank-2 free group: two hyperbolic translations whose axes cross at i at a
// right angle (the unit half-circle and the imaginary axis).  Discrete and
// free whenever sinh(l1/2) sinh(l2/2) >= 1, by the commutator-trace criterion
// tr[A,B] = 2 - 4 sinh^2(l1/2) sinh^2(l2/2) <= -2.  The defaults keep an 11%
// margin while making the base displacement l1 short, so successive orders of
// the diffractive expansion stay numerically resolvable.
inline pscatter::GroupSpec crossed_axes(double l1 = 1.0, double l2 = 3.0) {
    using pscatter::MoebiusMap;
    const double c1 = std::cosh(0.5 * l1), s1 = std::sinh(0.5 * l1);
    pscatter::GroupSpec g;
    g.label = "crossed_axes";
    g.z0 = pscatter::HPoint(0.0, 1.0);
    g.generators = {MoebiusMap(c1, s1, s1, c1),
                    MoebiusMap(std::exp(0.5 * l2), 0.0, 0.0, std::exp(-0.5 * l2))};
    return g;
}

}  // namespace testgroups
