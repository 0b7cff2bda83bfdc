#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stls/slicer.hpp"
#include "testutil.hpp"

using namespace stls;
using namespace testutil;

namespace {

PolygonGroup square_group(double side, Vec2 lo = {0, 0}) {
    PolygonGroup g;
    g.outer.points = {{lo.x, lo.y}, {lo.x + side, lo.y},
                      {lo.x + side, lo.y + side}, {lo.x, lo.y + side}};
    return g;
}

}  // namespace

TEST_CASE("deflate insets a square") {
    auto out = deflate({square_group(10)}, 1.0);
    REQUIRE(out.size() == 1);
    CHECK(std::abs(out[0].outer.signed_area()) == doctest::Approx(64.0));
    // Too large an inset collapses the region.
    CHECK(deflate({square_group(10)}, 5.5).empty());
}

TEST_CASE("deflate keeps holes and insets them outward") {
    PolygonGroup g = square_group(10);
    Polygon hole;
    hole.points = {{4, 4}, {4, 6}, {6, 6}, {6, 4}};  // CW, 2x2
    g.holes.push_back(hole);
    auto out = deflate({g}, 0.2);
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].holes.size() == 1);
    CHECK(std::abs(out[0].outer.signed_area()) == doctest::Approx(9.6 * 9.6));
    CHECK(std::abs(out[0].holes[0].signed_area()) == doctest::Approx(2.4 * 2.4));
}

TEST_CASE("perimeter loops sit at nozzle/2 + i*width") {
    PrintConfig config;
    config.perimeter_count = 2;
    MachineSpec machine;
    auto paths = generate_perimeters({square_group(10)}, config, machine);
    REQUIRE(paths.size() == 2);
    double w = machine.extrusion_width();
    double side0 = 10 - 2 * (machine.nozzle_diameter / 2);
    double side1 = 10 - 2 * (machine.nozzle_diameter / 2 + w);
    // Loop perimeters, outermost first inset by half a nozzle.
    double p0 = 0, p1 = 0;
    for (size_t i = 1; i < paths[0].points.size(); ++i)
        p0 += (paths[0].points[i] - paths[0].points[i - 1]).norm();
    for (size_t i = 1; i < paths[1].points.size(); ++i)
        p1 += (paths[1].points[i] - paths[1].points[i - 1]).norm();
    CHECK(p0 == doctest::Approx(4 * side0));
    CHECK(p1 == doctest::Approx(4 * side1));
}

TEST_CASE("rectilinear infill line count and serpentine order") {
    PrintConfig config;  // 100% density, angle 0
    MachineSpec machine;
    auto paths = generate_infill({square_group(10)}, config, machine, 0);
    // spacing = width, lines at y = 0, w, 2w, ... while y <= 10
    double w = machine.extrusion_width();
    size_t expect = (size_t)std::floor(10.0 / w + 1e-9) + 1;
    CHECK(paths.size() == expect);
    for (const auto& p : paths) {
        REQUIRE(p.points.size() == 2);
        CHECK(p.points[0].y == doctest::Approx(p.points[1].y));
    }
    // Serpentine: consecutive lines run in opposite x directions.
    for (size_t i = 1; i < paths.size(); ++i) {
        double d0 = paths[i - 1].points[1].x - paths[i - 1].points[0].x;
        double d1 = paths[i].points[1].x - paths[i].points[0].x;
        CHECK(d0 * d1 < 0);
    }
}

TEST_CASE("infill alternates 90 degrees on odd layers and respects density") {
    PrintConfig config;
    config.fill_density = 0.5;
    MachineSpec machine;
    auto even = generate_infill({square_group(10)}, config, machine, 0);
    auto odd = generate_infill({square_group(10)}, config, machine, 1);
    CHECK(even.front().points[0].y == doctest::Approx(even.front().points[1].y));
    CHECK(odd.front().points[0].x == doctest::Approx(odd.front().points[1].x));
    // Half density doubles the spacing: about half the lines.
    auto full = generate_infill({square_group(10)}, PrintConfig{}, machine, 0);
    CHECK(even.size() == (full.size() + 1) / 2);
}

TEST_CASE("infill avoids holes") {
    PolygonGroup g = square_group(10);
    Polygon hole;
    hole.points = {{3, 3}, {3, 7}, {7, 7}, {7, 3}};  // CW
    g.holes.push_back(hole);
    MachineSpec machine;
    auto paths = generate_infill({g}, PrintConfig{}, machine, 0);
    for (const auto& p : paths) {
        double y = p.points[0].y;
        if (y > 3 + 1e-6 && y < 7 - 1e-6) {
            // Segments at hole height must not cross the hole interior.
            double x0 = std::min(p.points[0].x, p.points[1].x);
            double x1 = std::max(p.points[0].x, p.points[1].x);
            CHECK((x1 <= 3 + 1e-6 || x0 >= 7 - 1e-6));
        }
    }
}

TEST_CASE("slice_slab emits markers, E discipline, and exact Z") {
    Mesh cube = make_cube(10);
    auto slabs = section_mesh(cube, 0.5);
    PrintConfig config;
    config.layer_height = 0.5;  // within default machine range [0.1, 0.4]? widen below
    MachineSpec machine;
    machine.layer_height_max = 0.5;
    config.z_offset = 3 * 0.5;
    GcodeProgram prog = slice_slab(slabs[3], config, machine, LayerPosition::intermediate);
    CHECK(prog.has_markers());
    // Every extruding move is at Z = z_offset + slab thickness.
    for (const auto& c : prog.commands) {
        if (c.code == "G1" && c.has('E')) CHECK(c.get('Z') == doctest::Approx(2.0));
    }
    // E is monotone after the per-layer reset.
    double last_e = 0;
    for (const auto& c : prog.commands) {
        if (c.code == "G92" && c.has('E')) last_e = c.get('E');
        if (c.code == "G1" && c.has('E')) {
            CHECK(c.get('E') >= last_e - 1e-12);
            last_e = c.get('E');
        }
    }
}

TEST_CASE("slice_slab cross-checks z_offset against the slab index") {
    Mesh cube = make_cube(10);
    auto slabs = section_mesh(cube, 0.3);
    PrintConfig config;  // z_offset 0, but slab 2 wants 0.6
    GcodeProgram ok = slice_slab(slabs[0], config, MachineSpec{}, LayerPosition::first);
    CHECK(!ok.commands.empty());
    CHECK_THROWS_AS(
        (void)slice_slab(slabs[2], config, MachineSpec{}, LayerPosition::intermediate),
        Error);
}

TEST_CASE("guide paths are tagged and excluded from body length accounting") {
    Mesh cube = make_cube(10, {100, 100, 0});  // away from the bed edge
    auto slabs = section_mesh(cube, 0.3);
    Slab s = add_guideline(std::move(slabs[0]), GuideSpec{}, bounding_box(cube));
    PrintConfig config;
    GcodeProgram prog = slice_slab(s, config, MachineSpec{}, LayerPosition::first);
    bool any_guide = false;
    for (const auto& c : prog.commands)
        if (c.comment == "GUIDE") any_guide = true;
    CHECK(any_guide);
    auto with = per_layer_extruded_length(prog, true);
    auto without = per_layer_extruded_length(prog, false);
    REQUIRE(with.size() == 1);
    REQUIRE(without.size() == 1);
    CHECK(with[0] > without[0] + 10.0);  // guide frame adds real length
}

TEST_CASE("monoslice layers the whole part with one header and footer") {
    Mesh cube = make_cube(9.9);  // 33 layers at 0.3
    PrintConfig config;
    MachineSpec machine;
    GcodeProgram prog = monoslice(cube, config, machine);
    auto zs = per_layer_z(prog);
    REQUIRE(zs.size() == 33);
    for (size_t i = 0; i < zs.size(); ++i)
        CHECK(zs[i] == doctest::Approx((i + 1) * 0.3));
    size_t homes = 0;
    for (const auto& c : prog.commands)
        if (c.code == "G28") homes++;
    CHECK(homes == 1);
}

TEST_CASE("extrusion tracks the volumetric formula") {
    Mesh cube = make_cube(10);
    auto slabs = section_mesh(cube, 0.3);
    PrintConfig config;
    config.perimeter_count = 0;  // infill only, straight segments
    MachineSpec machine;
    GcodeProgram prog = slice_slab(slabs[0], config, machine, LayerPosition::first);
    double w = machine.extrusion_width();
    double area = M_PI * machine.filament_diameter * machine.filament_diameter / 4;
    double len = per_layer_extruded_length(prog, true)[0];
    double e_total = 0;
    for (const auto& c : prog.commands)
        if (c.code == "G1" && c.has('E')) e_total = std::max(e_total, c.get('E'));
    CHECK(e_total == doctest::Approx(len * 0.3 * w / area).epsilon(1e-3));
}
