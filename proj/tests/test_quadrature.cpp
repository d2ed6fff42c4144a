// Unit tests for the quadrature kernels: Gauss-Kronrod panels, the adaptive
// driver, Gauss-Legendre panels, panel layouts, and the Romberg cross-check.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "pscatter/common.hpp"
#include "pscatter/quadrature.hpp"

using namespace pscatter;

namespace {

// exact integral of x^n over [a, b]
double monomial_integral(int n, double a, double b) {
    return (std::pow(b, n + 1) - std::pow(a, n + 1)) / double(n + 1);
}

}  // namespace

TEST_CASE("gk15 panel integrates polynomials through degree 22 exactly", "[quadrature]") {
    // 7-point Gauss with 15-point Kronrod extension: the returned Kronrod
    // value is exact for polynomial degree <= 22.
    for (int n = 0; n <= 22; ++n) {
        double err = 0.0;
        const double got = gk15_panel<double>([n](double x) { return std::pow(x, n); },
                                              -0.7, 1.3, err);
        REQUIRE(got == Catch::Approx(monomial_integral(n, -0.7, 1.3)).margin(1e-12));
    }
    // the embedded error estimate must notice a degree-30 residual
    double err = 0.0;
    gk15_panel<double>([](double x) { return std::pow(x, 30); }, -1.0, 3.0, err);
    REQUIRE(err > 0.0);
}

TEST_CASE("gl16 panel integrates polynomials through degree 31 exactly", "[quadrature]") {
    for (int n = 0; n <= 31; ++n) {
        const double got =
            gl16_panel<double>([n](double x) { return std::pow(x, n); }, -0.4, 2.1);
        const double want = monomial_integral(n, -0.4, 2.1);
        REQUIRE(got == Catch::Approx(want).margin(1e-11 * std::abs(want) + 1e-13));
    }
}

TEST_CASE("adaptive gk15 hits classic closed forms", "[quadrature]") {
    double err = 0.0;
    const double s = integrate_gk15<double>([](double x) { return std::sin(x); }, 0.0, pi,
                                            1e-14, 1e-14, 4000, &err);
    REQUIRE(s == Catch::Approx(2.0).margin(1e-13));
    REQUIRE(err <= 1e-12);

    const double e = integrate_gk15<double>([](double x) { return std::exp(x); }, 0.0, 1.0);
    REQUIRE(e == Catch::Approx(std::exp(1.0) - 1.0).margin(1e-13));

    // a narrow spike forces subdivision
    const double g = integrate_gk15<double>(
        [](double x) { return std::exp(-400.0 * x * x); }, -2.0, 2.0, 1e-14);
    REQUIRE(g == Catch::Approx(std::sqrt(pi) / 20.0).margin(1e-13));

    // oscillatory with known mean
    const double o = integrate_gk15<double>(
        [](double x) { double c = std::cos(10.0 * x); return c * c; }, 0.0, two_pi, 1e-13);
    REQUIRE(o == Catch::Approx(pi).margin(1e-11));
}

TEST_CASE("adaptive gk15 integrates complex integrands", "[quadrature]") {
    // int_0^1 e^{ix} dx = sin 1 + i(1 - cos 1)
    const cplx v = integrate_gk15<cplx>(
        [](double x) { return std::exp(cplx(0.0, x)); }, 0.0, 1.0, 1e-14);
    REQUIRE(v.real() == Catch::Approx(std::sin(1.0)).margin(1e-13));
    REQUIRE(v.imag() == Catch::Approx(1.0 - std::cos(1.0)).margin(1e-13));
}

TEST_CASE("adaptive gk15 throws once the panel budget is exhausted", "[quadrature]") {
    // |x|^(-1/2) near 0 cannot be resolved with 8 panels at this tolerance
    REQUIRE_THROWS_AS(integrate_gk15<double>(
                          [](double x) { return 1.0 / std::sqrt(std::abs(x) + 1e-300); },
                          -1.0, 1.0, 1e-14, 1e-14, 8),
                      std::runtime_error);
}

TEST_CASE("romberg agrees with gauss-kronrod on smooth integrands", "[quadrature]") {
    auto f = [](double x) { return std::cos(3.0 * x) * std::exp(-x); };
    const double a = 0.0, b = 4.0;
    const double r = romberg<double>(f, a, b, 1e-13);
    const double k = integrate_gk15<double>(f, a, b, 1e-14);
    REQUIRE(r == Catch::Approx(k).margin(1e-11));

    // complex variant
    auto fc = [](double x) { return std::exp(cplx(-x, 2.0 * x)); };
    const cplx rc = romberg<cplx>(fc, 0.0, 3.0, 1e-13);
    const cplx kc = integrate_gk15<cplx>(fc, 0.0, 3.0, 1e-14);
    REQUIRE(std::abs(rc - kc) < 1e-11);
}

TEST_CASE("panel layouts cover the interval with ordered edges", "[quadrature]") {
    const PanelLayout u = uniform_panels(1.0, 5.0, 0.7);
    REQUIRE(u.edges.front() == 1.0);
    REQUIRE(u.edges.back() == 5.0);
    for (std::size_t i = 0; i + 1 < u.edges.size(); ++i) {
        REQUIRE(u.edges[i] < u.edges[i + 1]);
        REQUIRE(u.edges[i + 1] - u.edges[i] <= 0.7 + 1e-12);
    }

    const PanelLayout g = geometric_panels(0.0, 0.1, 1.5, 20.0);
    REQUIRE(g.edges.front() == 0.0);
    REQUIRE(g.edges.back() == 20.0);
    for (std::size_t i = 0; i + 1 < g.edges.size(); ++i)
        REQUIRE(g.edges[i] < g.edges[i + 1]);
    // widths grow until the cap truncates the last panel
    for (std::size_t i = 1; i + 2 < g.edges.size(); ++i) {
        const double w0 = g.edges[i] - g.edges[i - 1];
        const double w1 = g.edges[i + 1] - g.edges[i];
        REQUIRE(w1 >= w0 - 1e-12);
    }
}

TEST_CASE("integrate_panels sums gl16 panels over a layout", "[quadrature]") {
    auto f = [](double x) { return 1.0 / (1.0 + x * x); };
    const PanelLayout lay = geometric_panels(0.0, 0.25, 1.3, 60.0);
    const double got = integrate_panels<double>(f, lay);
    // int_0^60 dx/(1+x^2) = atan 60
    REQUIRE(got == Catch::Approx(std::atan(60.0)).margin(1e-12));
}
