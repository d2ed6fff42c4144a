// The bundled group files must stay in lockstep with the reference
// constructions used throughout the suite: a drift in either direction would
// silently change what the demos and the command-line runs compute.

#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "pscatter/fuchsian.hpp"
#include "pscatter/io.hpp"
#include "support/groups.hpp"

using namespace pscatter;

namespace {

std::string data_path(const std::string& rel) {
    return std::string(PSCATTER_DATA_DIR) + "/" + rel;
}

void require_same_group(const GroupSpec& got, GroupSpec want, const std::string& label) {
    want.label = label;  // bundled labels differ from the constructor defaults
    REQUIRE(format_group(got) == format_group(want));
}

}  // namespace

TEST_CASE("bundled groups match the reference constructions", "[data]") {
    require_same_group(read_group(data_path("groups/toy_cyclic.group")),
                       testgroups::cyclic(1.25), "toy_cyclic");
    require_same_group(read_group(data_path("groups/elliptic_order2.group")),
                       testgroups::elliptic_order2(), "elliptic_order2");
    require_same_group(read_group(data_path("groups/bolza_octagon.group")),
                       testgroups::octagon(), "bolza_octagon");
    require_same_group(read_group(data_path("groups/crossed_axes.group")),
                       testgroups::crossed_axes(), "crossed_axes");
}

TEST_CASE("crossed-axes group is discrete with the expected base displacement", "[data]") {
    const GroupSpec spec = read_group(data_path("groups/crossed_axes.group"));
    // discreteness criterion for two hyperbolics with perpendicular crossing
    // axes (tr[A,B] = 2 - 4 sinh^2(l1/2) sinh^2(l2/2) <= -2), stated via the
    // translation lengths so it is insensitive to the PSL sign convention
    const double l1 = 2.0 * std::acosh(std::abs(spec.generators[0].trace()) / 2.0);
    const double l2 = 2.0 * std::acosh(std::abs(spec.generators[1].trace()) / 2.0);
    REQUIRE(std::sinh(0.5 * l1) * std::sinh(0.5 * l2) >= 1.0);
    const OrbitSpectrum orbit = enumerate_orbit(spec, 5.5);
    REQUIRE(orbit.tau0 == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(orbit.stabilizer_order == 1);
    REQUIRE(orbit.lengths.size() >= 10);
}

TEST_CASE("bundled octagon file drives orbit enumeration", "[data]") {
    const GroupSpec spec = read_group(data_path("groups/bolza_octagon.group"));
    const OrbitSpectrum orbit = enumerate_orbit(spec, 5.0);
    REQUIRE(orbit.tau0 ==
            Catch::Approx(2.0 * std::acosh(1.0 + std::sqrt(2.0))).margin(1e-12));
    REQUIRE(orbit.element_count == 48);
    REQUIRE(orbit.lengths.size() == 4);
    REQUIRE(orbit.stabilizer_order == 1);
}
