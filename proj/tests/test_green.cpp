// Unit tests for the free resolvent kernel: the Legendre closed form at
// s = 2, an independent quadrature scheme, the modulus envelope, and the
// orbit sum with its tail certificate.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "pscatter/fuchsian.hpp"
#include "pscatter/green.hpp"
#include "support/groups.hpp"
#include "support/oracles.hpp"

using namespace pscatter;

namespace {

// Independent route: same substitution t = d + u^2, but plain composite
// Simpson with a fixed fine grid instead of adaptive Gauss-Kronrod.
cplx green_by_simpson(cplx rho, double d, int n = 6000) {
    const double w = -rho.imag();
    const double umax = std::sqrt(40.0 / (w + 0.5));
    auto f = [&](double u) -> cplx {
        if (u == 0.0)  // limit of 2u / sqrt(cosh(d+u^2) - cosh d)
            return std::exp(cplx(0.0, -1.0) * rho * d) * (2.0 / std::sqrt(std::sinh(d)));
        const double t = d + u * u;
        const double den = std::sqrt(2.0 * std::sinh(d + 0.5 * u * u) * std::sinh(0.5 * u * u));
        return std::exp(cplx(0.0, -1.0) * rho * t) * (2.0 * u / den);
    };
    return -oracle::simpson(f, 0.0, umax, n) / (two_pi * std::sqrt(2.0));
}

}  // namespace

TEST_CASE("kernel at s = 2 matches the Legendre Q1 closed form", "[green]") {
    // G_{s=2}(d) = -Q1(cosh d) / (2 pi)
    for (double d : {0.05, 0.2231, std::acosh(1.25), 0.8, 1.3, 2.4, 4.0, 7.5}) {
        const double want = -oracle::legendre_q1(std::cosh(d)) / two_pi;
        const cplx got = free_green_s(cplx(2.0, 0.0), d);
        INFO("d = " << d);
        REQUIRE(got.real() == Catch::Approx(want).margin(1e-10));
        REQUIRE(std::abs(got.imag()) < 1e-10);
    }
    // spot value: Q1(1.25) = 0.625 log 9 - 1, so Q1(1.25)/(2 pi) = 0.0594070272...
    const cplx g = free_green_s(cplx(2.0, 0.0), std::acosh(1.25));
    REQUIRE(g.real() == Catch::Approx(-0.059407027261892024).margin(1e-9));
}

TEST_CASE("kernel agrees with an independent quadrature scheme", "[green]") {
    Rng rng(31);
    for (int k = 0; k < 40; ++k) {
        const double d = std::exp(rng.uniform(std::log(0.05), std::log(6.0)));
        const cplx rho(rng.uniform(-8.0, 8.0), -rng.uniform(0.7, 3.0));
        const cplx a = free_green(rho, d);
        const cplx b = green_by_simpson(rho, d);
        INFO("d = " << d << ", rho = " << rho.real() << " " << rho.imag() << "i");
        REQUIRE(std::abs(a - b) < 1e-9);
    }
}

TEST_CASE("kernel addressed by s or by rho is the same function", "[green]") {
    const cplx s(1.7, 0.9);
    const cplx rho(s.imag(), 0.5 - s.real());
    const double d = 1.1;
    REQUIRE(std::abs(free_green_s(s, d) - free_green(rho, d)) < 1e-14);
}

TEST_CASE("kernel rejects out-of-domain arguments", "[green]") {
    REQUIRE_THROWS_AS(free_green(cplx(0.0, -1.0), 0.0), std::domain_error);
    REQUIRE_THROWS_AS(free_green(cplx(0.0, -1.0), -0.5), std::domain_error);
    // Im rho must sit below -1/2 - margin
    REQUIRE_THROWS_AS(free_green(cplx(0.0, -0.5), 1.0), std::domain_error);
    REQUIRE_THROWS_AS(free_green(cplx(1.0, 0.3), 1.0), std::domain_error);
    REQUIRE_THROWS_AS(exp_weight_integral(-1.0, 2.0), std::domain_error);
    REQUIRE_THROWS_AS(exp_weight_integral(1.0, 0.5), std::domain_error);
}

TEST_CASE("exp weight equals the kernel modulus on the imaginary axis", "[green]") {
    // E(l, sigma) = -2 pi sqrt2 G_{-i sigma}(l), and the kernel is real there
    for (double l : {0.3, 1.25, 3.0})
        for (double sigma : {0.8, 1.5, 4.0}) {
            const double e = exp_weight_integral(l, sigma);
            const cplx g = free_green(cplx(0.0, -sigma), l);
            REQUIRE(std::abs(g.imag()) < 1e-13);
            REQUIRE(e == Catch::Approx(-two_pi * std::sqrt(2.0) * g.real()).epsilon(1e-10));
            REQUIRE(e > 0.0);
        }
}

TEST_CASE("exp weight bounds the kernel modulus along horizontal lines", "[green]") {
    Rng rng(57);
    for (int k = 0; k < 60; ++k) {
        const double l = std::exp(rng.uniform(std::log(0.2), std::log(4.0)));
        const double sigma = rng.uniform(0.7, 3.0);
        const double x = rng.uniform(-30.0, 30.0);
        const double env = exp_weight_integral(l, sigma) / (two_pi * std::sqrt(2.0));
        const double mag = std::abs(free_green(cplx(x, -sigma), l));
        REQUIRE(mag <= env * (1.0 + 1e-9));
    }
}

TEST_CASE("orbit sum accumulates kernels with the tail certificate attached", "[green]") {
    const OrbitSpectrum orb = enumerate_orbit(testgroups::cyclic(1.25), 10.0);
    const cplx rho(0.7, -1.2);
    const ValueWithTail<cplx> s = green_sum(orb, rho);
    CompensatedSumC manual;
    for (const auto& e : orb.lengths)
        manual.add(double(e.mult) * free_green(rho, e.length));
    REQUIRE(std::abs(s.value - manual.result()) < 1e-14);
    REQUIRE(s.tail == orbit_tail_bound(orb, 1.2));
    REQUIRE(s.tail > 0.0);
}

TEST_CASE("kernel decays at the certified exponential rate", "[green]") {
    // |G(d)| for Im rho = -w decays like e^{-(w+1/2)d}; doubling d from 3 to 6
    // must shrink the modulus by at least e^{-(w+0.45)*3}
    for (double w : {1.0, 2.0}) {
        const double g3 = std::abs(free_green(cplx(0.3, -w), 3.0));
        const double g6 = std::abs(free_green(cplx(0.3, -w), 6.0));
        REQUIRE(g6 < g3 * std::exp(-(w + 0.45) * 3.0));
    }
}
