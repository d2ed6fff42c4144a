// Unit tests for the admissible test functions: the Cauchy family, the
// numerical membership check, and the slowly decaying dyadic ladder.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "pscatter/testfn.hpp"

using namespace pscatter;

TEST_CASE("cauchy family members pass the admissibility check", "[testfn]") {
    for (int power : {2, 3, 4}) {
        const TestFunction f = make_cauchy_h(2.0, power);
        REQUIRE(f.sigma > 1.9);
        REQUIRE(f.delta == Catch::Approx(2.0 * power - 2.5));
        const MembershipReport rep = membership_check(f);
        INFO("power = " << power << ", loop_err = " << rep.loop_err
                        << ", cr_err = " << rep.cr_err);
        REQUIRE(rep.even_ok);
        REQUIRE(rep.conj_ok);
        REQUIRE(rep.decay_ok);
        REQUIRE(rep.analytic_ok);
        REQUIRE(rep.loop_ok);
        REQUIRE(rep.pass);
    }
    REQUIRE_THROWS_AS(make_cauchy_h(-1.0, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(make_cauchy_h(2.0, 1), std::invalid_argument);
}

TEST_CASE("claimed derivatives match finite differences", "[testfn]") {
    const TestFunction f = make_cauchy_h(1.5, 3);
    const double h = 1e-6;
    for (const cplx z : {cplx(0.3, 0.2), cplx(-4.0, -0.9), cplx(12.0, 1.0)}) {
        const cplx fd = (f.h(z + h) - f.h(z - h)) / (2.0 * h);
        REQUIRE(std::abs(f.hp(z) - fd) <= 1e-7 * (1.0 + std::abs(fd)));
    }
}

TEST_CASE("membership rejects a pole hidden inside the claimed strip", "[testfn]") {
    // honest poles at +-2i, dishonest claim sigma = 3.5
    TestFunction f = make_cauchy_h(2.0, 2);
    f.sigma = 3.5;
    const MembershipReport rep = membership_check(f);
    REQUIRE_FALSE(rep.pass);
    REQUIRE_FALSE(rep.loop_ok);  // the residue shows up in a closed loop
}

TEST_CASE("membership rejects an odd function", "[testfn]") {
    TestFunction f;
    f.name = "odd_probe";
    f.sigma = 1.0;
    f.delta = 1.0;
    f.h = [](cplx z) { return z / std::pow(z * z + 9.0, 3); };
    f.hp = [](cplx z) {
        return (9.0 - 5.0 * z * z) / std::pow(z * z + 9.0, 4);
    };
    const MembershipReport rep = membership_check(f);
    REQUIRE_FALSE(rep.even_ok);
    REQUIRE_FALSE(rep.pass);
}

TEST_CASE("membership rejects an overclaimed decay exponent", "[testfn]") {
    // |h| ~ x^{-4} but delta = 5 claims x^{-7}
    TestFunction f = make_cauchy_h(2.0, 2);
    f.delta = 5.0;
    const MembershipReport rep = membership_check(f);
    REQUIRE_FALSE(rep.decay_ok);
    REQUIRE_FALSE(rep.pass);
}

TEST_CASE("membership rejects a conjugate-asymmetric function", "[testfn]") {
    TestFunction f;
    f.name = "complex_coeff";
    f.sigma = 1.0;
    f.delta = 1.0;
    f.h = [](cplx z) { return cplx(0.0, 1.0) / std::pow(z * z + 9.0, 2); };
    f.hp = [](cplx z) { return cplx(0.0, -4.0) * z / std::pow(z * z + 9.0, 3); };
    const MembershipReport rep = membership_check(f);
    REQUIRE_FALSE(rep.conj_ok);
    REQUIRE_FALSE(rep.pass);
}

TEST_CASE("dyadic ladder validation enforces its window constraints", "[testfn]") {
    DyadicLadderParams p;
    p.T = {2.5, 45.0, 750.0};
    p.n = {2, 6, 10};
    REQUIRE_NOTHROW(p.validate());

    DyadicLadderParams close = p;
    close.n = {2, 5, 10};  // ladder step of 3 < 4
    REQUIRE_THROWS_AS(close.validate(), std::invalid_argument);

    DyadicLadderParams window = p;
    window.T[0] = 40.0;  // 2^{n-1} = 2 <= 40 holds but 40 + 40^omega > 2^4
    REQUIRE_THROWS_AS(window.validate(), std::invalid_argument);

    DyadicLadderParams strip = p;
    strip.sigma0 = 0.5;  // poles inside the claimed strip
    REQUIRE_THROWS_AS(strip.validate(), std::invalid_argument);

    DyadicLadderParams eps = p;
    eps.eps = 2.5;
    REQUIRE_THROWS_AS(eps.validate(), std::invalid_argument);

    DyadicLadderParams empty;
    REQUIRE_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("greedy ladder selection picks an admissible subsequence", "[testfn]") {
    const std::vector<double> heights = {0.5, 2.5, 3.0, 45.0, 47.0, 750.0, 800.0};
    const DyadicLadderParams p = DyadicLadderParams::from_heights(heights, 0.5, 1.0);
    REQUIRE(p.T.size() == 3);
    REQUIRE(p.T[0] == 2.5);
    REQUIRE(p.T[1] == 45.0);
    REQUIRE(p.T[2] == 750.0);
    REQUIRE_NOTHROW(p.validate());
    REQUIRE_THROWS_AS(DyadicLadderParams::from_heights({0.2, 0.9}, 0.5, 1.0),
                      std::invalid_argument);
}

TEST_CASE("ladder function is admissible on its own strip", "[testfn]") {
    const DyadicLadderParams p =
        DyadicLadderParams::from_heights({2.5, 45.0, 750.0}, 0.5, 1.0);
    const TestFunction f = make_ladder_h(p);
    REQUIRE(f.sigma == 1.0);
    REQUIRE(f.delta == Catch::Approx(0.25));
    const MembershipReport rep = membership_check(f);
    INFO("even " << rep.even_err << " conj " << rep.conj_err << " loop " << rep.loop_err);
    REQUIRE(rep.even_err <= 1e-12);
    REQUIRE(rep.conj_err <= 1e-12);
    REQUIRE(rep.pass);

    // derivative spot checks
    const double h = 1e-6;
    for (const cplx z : {cplx(2.0, 0.3), cplx(44.0, -0.5), cplx(-700.0, 0.0)}) {
        const cplx fd = (f.h(z + h) - f.h(z - h)) / (2.0 * h);
        REQUIRE(std::abs(f.hp(z) - fd) <= 1e-6 * (1.0 + std::abs(fd)));
    }
}

TEST_CASE("ladder rungs keep their slow polynomial mass", "[testfn]") {
    // at each rung center a_k the dominating quadruple term is
    // (i sigma0)^{-4} = sigma0^{-4} > 0, so h(a_k) stays within a factor of
    // two of wgt_k / sigma0^4; the decay exponent 2 + eps/2 is genuinely slow
    const DyadicLadderParams p =
        DyadicLadderParams::from_heights({2.5, 45.0, 750.0}, 0.5, 1.0);
    const TestFunction f = make_ladder_h(p);
    for (std::size_t k = 0; k < p.T.size(); ++k) {
        const double a = p.T[k] + std::pow(p.T[k], p.omega());
        const double wgt = std::exp2(-double(p.n[k]) * (2.0 + 0.5 * p.eps));
        const double floor = 0.5 * wgt / std::pow(p.sigma0, 4);
        const double val = f.h(cplx(a, 0.0)).real();
        INFO("rung " << k << ": h(a) = " << val << ", floor = " << floor);
        REQUIRE(val >= floor);
        // and the rung mass is comparable to T^{-(2+eps/2)} itself: no hidden
        // faster decay
        REQUIRE(val * std::pow(p.T[k], 2.0 + 0.5 * p.eps) > 1e-3);
    }
}
