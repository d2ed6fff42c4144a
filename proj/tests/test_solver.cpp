// Unit tests for the perturbed-eigenvalue solver: closed-form checks,
// interlacing against an independent sign scan, inheritance bookkeeping,
// safe heights, and the polynomial growth diagnostic.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pscatter/solver.hpp"
#include "pscatter/synthetic.hpp"
#include "support/oracles.hpp"

using namespace pscatter;

namespace {

CouplingContext plain_context(double alpha) {
    CouplingContext ctx;
    ctx.alpha = alpha;
    ctx.alpha_inv = 1.0 / alpha;
    ctx.beta = alpha;  // no orbit correction in these synthetic tests
    return ctx;
}

}  // namespace

TEST_CASE("negative coupling pulls the ground state to alpha times weight", "[solver]") {
    // single visible mode at lambda = 0: S = 1/alpha - w0/lambda, so the new
    // eigenvalue sits exactly at alpha w0 below the spectrum
    Spectrum spec;
    spec.area = 4.0 * pi;
    spec.entries = {{0.0, 1, 0.35}, {100.0, 1, 0.0}};  // invisible tail for range safety
    const CouplingContext ctx = plain_context(-2.0);
    const PerturbedSpectrum pert = solve_new_eigs(ctx, spec, 1.0);
    REQUIRE(pert.ground_found);
    REQUIRE(pert.new_eigs.size() == 1);
    REQUIRE(pert.new_eigs[0].is_ground);
    REQUIRE(pert.new_eigs[0].lambda == Catch::Approx(-0.7).epsilon(1e-11));
    // the invisible entry is inherited untouched
    REQUIRE(pert.inherited.size() == 1);
    REQUIRE(pert.inherited[0].lambda == 100.0);
    REQUIRE(pert.inherited[0].mult == 1);
}

TEST_CASE("positive coupling places the top zero at alpha times weight", "[solver]") {
    // same single-mode model with the sign flipped: S = 1/alpha - w0/lambda
    // now vanishes at alpha w0 above the spectrum, in the unbounded gap
    Spectrum spec;
    spec.area = 4.0 * pi;
    spec.entries = {{0.0, 1, 0.5}, {100.0, 1, 0.0}};
    const PerturbedSpectrum pert = solve_new_eigs(plain_context(2.0), spec, 20.0);
    REQUIRE_FALSE(pert.ground_found);
    REQUIRE(pert.new_eigs.size() == 1);
    REQUIRE_FALSE(pert.new_eigs[0].is_ground);
    REQUIRE(pert.new_eigs[0].lambda == Catch::Approx(1.0).epsilon(1e-11));
    REQUIRE(pert.new_eigs[0].bracket_lo == 0.0);
    REQUIRE(pert.new_eigs[0].bracket_hi == inf);
}

TEST_CASE("two-pole spectrum matches an independently coded bisection", "[solver]") {
    Spectrum spec;
    spec.area = 4.0 * pi;
    spec.entries = {{0.0, 1, 0.35}, {5.0, 1, 0.8}, {120.0, 1, 0.0}};
    const double alpha = 2.0;
    const CouplingContext ctx = plain_context(alpha);
    const PerturbedSpectrum pert = solve_new_eigs(ctx, spec, 20.0);

    // oracle: retype the rational equation and bisect it with the plain
    // scalar bisector, once on the open gap (0, 5) and once on the unbounded
    // gap above 5 (S tends to 1/2 - 0.8 * 5/26 > 0 there, so a zero exists)
    auto s_manual = [&](double l) {
        return 1.0 / alpha - 0.35 / l + 0.8 * (1.0 + 5.0 * l) / ((5.0 - l) * 26.0);
    };
    auto bisect = [&](double lo, double hi) {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (s_manual(mid) < 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double want_mid = bisect(1e-9, 5.0 - 1e-9);
    const double want_top = bisect(5.0 + 1e-9, 20.0);

    REQUIRE(pert.new_eigs.size() == 2);  // positive alpha: no ground state here
    REQUIRE_FALSE(pert.new_eigs[0].is_ground);
    REQUIRE(pert.new_eigs[0].lambda == Catch::Approx(want_mid).margin(1e-9));
    REQUIRE(pert.new_eigs[0].bracket_lo == 0.0);
    REQUIRE(pert.new_eigs[0].bracket_hi == 5.0);
    REQUIRE_FALSE(pert.new_eigs[1].is_ground);
    REQUIRE(pert.new_eigs[1].lambda == Catch::Approx(want_top).margin(1e-9));
    REQUIRE(pert.new_eigs[1].bracket_lo == 5.0);
    REQUIRE(pert.new_eigs[1].bracket_hi == inf);
}

TEST_CASE("new eigenvalues strictly interlace the visible poles", "[solver]") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SyntheticOptions opt;
        opt.count = 200;
        opt.mult2_prob = 0.15;
        opt.zero_weight_prob = 0.10;
        const Spectrum spec = make_weyl_spectrum(seed, opt);
        const CouplingContext ctx = plain_context(seed % 2 ? 1.6 : -0.9);
        const double lambda_max = spec.lambda_top() / 4.0;
        const PerturbedSpectrum pert = solve_new_eigs(ctx, spec, lambda_max);

        double prev = -inf;
        for (const auto& z : pert.new_eigs) {
            REQUIRE(z.lambda > prev);
            if (!z.is_ground) {
                REQUIRE(z.lambda > z.bracket_lo);
                REQUIRE(z.lambda < z.bracket_hi);
            }
            // simplicity: S is strictly increasing wherever it vanishes
            REQUIRE(s_prime_spectral_raw(spec, z.lambda) > 0.0);
            prev = z.lambda;
        }

        // parity with the independent sign scan over the same window
        const double lo = pert.ground_found ? pert.new_eigs.front().lambda - 1.0 : -1.0;
        const long scanned = oracle::sign_scan_zero_count(ctx, spec, lo, lambda_max, 96);
        REQUIRE(scanned == long(pert.new_eigs.size()));
    }
}

TEST_CASE("invisible and multiple eigenvalues are inherited correctly", "[solver]") {
    Spectrum spec;
    spec.area = 4.0 * pi;
    spec.entries = {{0.0, 1, 0.1}, {2.0, 3, 0.2}, {4.0, 2, 0.0}, {300.0, 1, 0.0}};
    const PerturbedSpectrum pert = solve_new_eigs(plain_context(1.0), spec, 10.0);
    // lambda = 2 keeps multiplicity 2 of its 3; lambda = 4 keeps both copies
    REQUIRE(pert.inherited.size() == 3);
    REQUIRE(pert.inherited[0].lambda == 2.0);
    REQUIRE(pert.inherited[0].mult == 2);
    REQUIRE(pert.inherited[1].lambda == 4.0);
    REQUIRE(pert.inherited[1].mult == 2);
    REQUIRE(pert.inherited[2].lambda == 300.0);
}

TEST_CASE("solver demands data far beyond the requested window", "[solver]") {
    const Spectrum spec = make_weyl_spectrum(3);
    const CouplingContext ctx = plain_context(1.0);
    REQUIRE_THROWS_AS(solve_new_eigs(ctx, spec, spec.lambda_top()), std::invalid_argument);
    REQUIRE_THROWS_AS(solve_new_eigs(ctx, spec, -1.0), std::invalid_argument);
    CouplingContext nofin = ctx;
    nofin.alpha_inv = inf;
    REQUIRE_THROWS_AS(solve_new_eigs(nofin, spec, 1.0), std::invalid_argument);
    // all-invisible spectrum: nothing to do, flagged as a warning
    Spectrum blind;
    blind.area = 4.0 * pi;
    blind.entries = {{0.0, 1, 0.0}, {50.0, 1, 0.0}};
    const PerturbedSpectrum none = solve_new_eigs(ctx, blind, 10.0);
    REQUIRE(none.new_eigs.empty());
    REQUIRE_FALSE(none.warnings.empty());
}

TEST_CASE("gap subsequence picks exactly the wide gaps", "[solver]") {
    Spectrum spec;
    spec.area = 4.0 * pi;
    spec.entries = {{0.0, 1, 0.1}, {1.0, 1, 0.1},  {1.2, 1, 0.1},
                    {3.0, 1, 0.1}, {3.05, 1, 0.0},  // invisible: not a pole
                    {6.0, 1, 0.1}};
    // visible pole gaps: 1.0, 0.2, 1.8, 3.0
    const auto idx = gap_subsequence(spec, 0.9);
    REQUIRE(idx == std::vector<std::size_t>{0, 2, 3});
    REQUIRE(gap_subsequence(spec, 2.5) == std::vector<std::size_t>{3});
}

TEST_CASE("safe heights use the midpoint on the wider side of the zero", "[solver]") {
    // poles at rho = 1 and rho = 2 with the interlacing zero at rho = 1.8:
    // the left side is wider, so T = (1 + 1.8)/2 = 1.4
    Spectrum spec;
    spec.area = 4.0 * pi;
    spec.entries = {{1.25, 1, 0.3}, {4.25, 1, 0.3}};
    PerturbedSpectrum pert;
    pert.lambda_max = 5.0;
    pert.new_eigs = {{0.25 + 1.8 * 1.8, 1.25, 4.25, false}};
    const auto heights = safe_heights(spec, pert, 1.0);
    REQUIRE(heights.size() == 1);
    REQUIRE(heights[0].T == Catch::Approx(1.4).margin(1e-12));
    REQUIRE(heights[0].clearance == Catch::Approx(0.4).margin(1e-12));
    REQUIRE(heights[0].gap_rho == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("safe heights clear every pole and zero on real spectra", "[solver]") {
    const Spectrum spec = make_weyl_spectrum(17);
    const CouplingContext ctx = plain_context(1.3);
    const double lambda_max = spec.lambda_top() / 4.0;
    const PerturbedSpectrum pert = solve_new_eigs(ctx, spec, lambda_max);
    const auto heights = safe_heights(spec, pert, 2.0 * pi / spec.area);
    REQUIRE_FALSE(heights.empty());
    for (const auto& h : heights) {
        REQUIRE(h.clearance > 0.0);
        REQUIRE(h.clearance >= 0.25 * h.gap_rho * 0.5 - 1e-12);
        // verify the clearance claim directly against the data
        double nearest = inf;
        for (const auto& e : spec.entries)
            if (e.weight > 0.0 && e.lambda > 0.25)
                nearest = std::min(nearest, std::abs(std::sqrt(e.lambda - 0.25) - h.T));
        for (const auto& z : pert.new_eigs)
            if (z.lambda > 0.25)
                nearest = std::min(nearest, std::abs(std::sqrt(z.lambda - 0.25) - h.T));
        REQUIRE(nearest == Catch::Approx(h.clearance).margin(1e-12));
    }
}

TEST_CASE("polynomial growth diagnostic stays bounded and decays in T", "[solver]") {
    SyntheticOptions opt;
    opt.count = 3000;
    const Spectrum spec = make_weyl_spectrum(23, opt);
    const double d5 = polybound_diagnostic(spec, 5.0, 2.0);
    const double d10 = polybound_diagnostic(spec, 10.0, 2.0);
    const double d20 = polybound_diagnostic(spec, 20.0, 2.0);
    REQUIRE(d5 > 0.0);
    REQUIRE(std::isfinite(d5));
    REQUIRE(d10 < d5);  // resolvent difference grows slower than T^5
    REQUIRE(d20 < d10);
    REQUIRE_THROWS_AS(polybound_diagnostic(spec, 1.0, 2.0), std::invalid_argument);
}
