// Unit tests for orbit enumeration over Fuchsian groups.  The oracle is a
// brute-force word ball with no geometric pruning; saturation is certified by
// comparing consecutive depths before trusting it.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pscatter/fuchsian.hpp"
#include "pscatter/green.hpp"
#include "support/groups.hpp"
#include "support/oracles.hpp"

using namespace pscatter;

namespace {

void require_same_lengths(const std::vector<LengthEntry>& got,
                          const std::vector<LengthEntry>& want) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        REQUIRE(got[i].length == Catch::Approx(want[i].length).margin(1e-10));
        REQUIRE(got[i].mult == want[i].mult);
    }
}

}  // namespace

TEST_CASE("cyclic group orbit lengths are exact multiples of the step", "[fuchsian]") {
    const double l = 1.25;
    const GroupSpec g = testgroups::cyclic(l);
    const OrbitSpectrum orb = enumerate_orbit(g, 10.0);
    REQUIRE(orb.stabilizer_order == 1);
    REQUIRE(orb.tau0 == Catch::Approx(l).epsilon(1e-13));
    REQUIRE(orb.lengths.size() == 8);  // k l <= 10 for k = 1..8
    REQUIRE(orb.element_count == 16);
    for (std::size_t k = 0; k < orb.lengths.size(); ++k) {
        REQUIRE(orb.lengths[k].length ==
                Catch::Approx(double(k + 1) * l).epsilon(1e-12));
        REQUIRE(orb.lengths[k].mult == 2);  // the power and its inverse
    }
}

TEST_CASE("cyclic group orbit agrees with the brute-force word ball", "[fuchsian]") {
    const GroupSpec g = testgroups::cyclic(1.25);
    const OrbitSpectrum orb = enumerate_orbit(g, 10.0);
    const oracle::WordBall wb = oracle::word_ball(g, 9, 10.0);
    const oracle::WordBall wb2 = oracle::word_ball(g, 10, 10.0);
    REQUIRE(wb.element_count == wb2.element_count);  // ball saturated
    REQUIRE(orb.stabilizer_order == wb.stabilizer);
    REQUIRE(orb.element_count == wb.element_count);
    require_same_lengths(orb.lengths, wb.lengths);
}

TEST_CASE("elliptic fixed point inflates the stabilizer, not the lengths", "[fuchsian]") {
    const GroupSpec g = testgroups::elliptic_order2();  // z0 = i is the fixed point
    const OrbitSpectrum orb = enumerate_orbit(g, 8.0);
    REQUIRE(orb.stabilizer_order == 2);
    REQUIRE(orb.lengths.empty());
    REQUIRE(orb.element_count == 0);
    REQUIRE(orb.tau0 == inf);
}

TEST_CASE("elliptic group seen from off-center has a single orbit point", "[fuchsian]") {
    const HPoint z0(0.3, 1.1);
    const GroupSpec g = testgroups::elliptic_order2(z0);
    const OrbitSpectrum orb = enumerate_orbit(g, 8.0);
    REQUIRE(orb.stabilizer_order == 1);
    REQUIRE(orb.lengths.size() == 1);
    REQUIRE(orb.lengths[0].mult == 1);
    const double want = dist(z0, g.generators[0].apply(z0));
    REQUIRE(orb.lengths[0].length == Catch::Approx(want).epsilon(1e-13));
}

TEST_CASE("octagon group orbit matches the word ball and the exact systole", "[fuchsian]") {
    const GroupSpec g = testgroups::octagon();
    const OrbitSpectrum orb = enumerate_orbit(g, 6.0);
    REQUIRE(orb.stabilizer_order == 1);  // torsion-free surface group
    REQUIRE(orb.tau0 ==
            Catch::Approx(2.0 * std::acosh(1.0 + std::sqrt(2.0))).epsilon(1e-13));
    REQUIRE(orb.lengths.front().mult == 8);  // four generators and their inverses

    const oracle::WordBall wb4 = oracle::word_ball(g, 4, 6.0);
    const oracle::WordBall wb5 = oracle::word_ball(g, 5, 6.0);
    REQUIRE(wb4.element_count == wb5.element_count);  // ball saturated at depth 4
    REQUIRE(orb.element_count == wb4.element_count);
    REQUIRE(orb.stabilizer_order == wb4.stabilizer);
    require_same_lengths(orb.lengths, wb4.lengths);
}

TEST_CASE("enumeration carries its partial result into the budget error", "[fuchsian]") {
    const GroupSpec g = testgroups::octagon();
    try {
        enumerate_orbit(g, 9.0, 64);
        FAIL("expected enumeration_budget_error");
    } catch (const enumeration_budget_error& e) {
        REQUIRE(e.partial.label == g.label);
        REQUIRE(e.partial.radius == 9.0);
        // the partial data reflects whatever was explored, nothing invented
        long count = 0;
        for (const auto& le : e.partial.lengths) count += le.mult;
        REQUIRE(count == e.partial.element_count);
    }
}

TEST_CASE("group and orbit validation reject malformed input", "[fuchsian]") {
    GroupSpec empty;
    REQUIRE_THROWS_AS(empty.validate(), std::invalid_argument);

    GroupSpec with_id = testgroups::cyclic();
    with_id.generators.push_back(MoebiusMap());
    REQUIRE_THROWS_AS(with_id.validate(), std::invalid_argument);

    REQUIRE_THROWS_AS(enumerate_orbit(testgroups::cyclic(), -1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(enumerate_orbit(testgroups::cyclic(), inf), std::invalid_argument);
}

TEST_CASE("orbit tail bound is monotone and vanishes for finite groups", "[fuchsian]") {
    const GroupSpec g = testgroups::cyclic(1.25);
    const OrbitSpectrum orb = enumerate_orbit(g, 12.0);
    const double b1 = orbit_tail_bound(orb, 1.0);
    const double b2 = orbit_tail_bound(orb, 2.0);
    const double b4 = orbit_tail_bound(orb, 4.0);
    REQUIRE(b1 > b2);
    REQUIRE(b2 > b4);
    REQUIRE(b4 > 0.0);

    // deeper enumeration shrinks the certificate
    const OrbitSpectrum deeper = enumerate_orbit(g, 24.0);
    REQUIRE(orbit_tail_bound(deeper, 1.0) < b1);

    // finite group: nothing was omitted
    const OrbitSpectrum fin = enumerate_orbit(testgroups::elliptic_order2(), 8.0);
    REQUIRE(orbit_tail_bound(fin, 1.0) == 0.0);

    REQUIRE_THROWS_AS(orbit_tail_bound(orb, 0.5), std::domain_error);
}

TEST_CASE("orbit tail bound dominates the omitted orbit mass", "[fuchsian]") {
    // cyclic group: elements beyond R are known exactly, so the certified
    // bound can be compared with the true omitted kernel sum
    const double l = 1.25;
    const GroupSpec g = testgroups::cyclic(l);
    const OrbitSpectrum orb = enumerate_orbit(g, 10.0);
    for (double w : {0.8, 1.5, 3.0}) {
        const cplx rho(0.4, -w);
        CompensatedSumC omitted;
        for (int k = 9; k * l < 10.0 + 200.0; ++k)
            omitted.add(2.0 * free_green(rho, double(k) * l));
        const double actual = std::abs(omitted.result());
        REQUIRE(actual <= orbit_tail_bound(orb, w));
    }
}
