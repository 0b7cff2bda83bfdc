#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stls/sectioner.hpp"
#include "stls/stl_io.hpp"
#include "testutil.hpp"

using namespace stls;
using namespace testutil;

namespace {

double slab_volume_sum(const std::vector<Slab>& slabs) {
    double v = 0;
    for (const auto& s : slabs) v += signed_volume(s.body);
    return v;
}

}  // namespace

TEST_CASE("sectioning count: height/h slabs, top slab may be thin") {
    Mesh cube = make_cube(10);
    auto slabs = section_mesh(cube, 0.5);
    CHECK(slabs.size() == 20);

    // 3.0 mm tall part at h=0.3 gives exactly ten sections.
    Mesh low = stls::make_box({0, 0, 0}, {10, 10, 3.0});
    CHECK(section_mesh(low, 0.3).size() == 10);

    // 3.1 mm: eleventh slab is 0.1 thick.
    Mesh low2 = stls::make_box({0, 0, 0}, {10, 10, 3.1});
    auto s2 = section_mesh(low2, 0.3);
    CHECK(s2.size() == 11);
    CHECK(s2.back().z_hi - s2.back().z_lo == doctest::Approx(0.1));
}

TEST_CASE("slabs are closed and conserve volume") {
    for (const Mesh& mesh : {make_cube(10), make_cone(5, 6), make_tube(5, 3, 6),
                             make_tshape(), make_table()}) {
        auto slabs = section_mesh(mesh, 0.7);  // off-grid h exercises mid-cell cuts
        double expect = signed_volume(mesh);
        for (const auto& s : slabs) CHECK(is_closed(s.body));
        CHECK(slab_volume_sum(slabs) == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("slab index and z bookkeeping") {
    auto slabs = section_mesh(make_cube(10), 0.5);
    for (size_t i = 0; i < slabs.size(); ++i) {
        CHECK(slabs[i].index == i);
        CHECK(slabs[i].z_lo == doctest::Approx(i * 0.5));
        CHECK(slabs[i].z_hi == doctest::Approx((i + 1) * 0.5));
    }
}

TEST_CASE("touching shells split cleanly at the shared plane") {
    Mesh t = make_tshape();  // stem [0,6], crossbar [6,8], coplanar at z=6
    auto slabs = section_mesh(t, 2.0);
    REQUIRE(slabs.size() == 4);
    // slabs 0-2 are the 4x4 stem; slab 3 is the 12x4 crossbar
    CHECK(signed_volume(slabs[0].body) == doctest::Approx(4 * 4 * 2));
    CHECK(signed_volume(slabs[2].body) == doctest::Approx(4 * 4 * 2));
    CHECK(signed_volume(slabs[3].body) == doctest::Approx(12 * 4 * 2));
}

TEST_CASE("sectioning rejects bad inputs") {
    Mesh cube = make_cube(10);
    CHECK_THROWS_AS((void)section_mesh(cube, -0.1), Error);
    CHECK_THROWS_AS((void)section_mesh(cube, 0.5, 0.1, 0.4), Error);  // h out of range
    Mesh open = cube;
    open.triangles.pop_back();
    CHECK_THROWS_AS((void)section_mesh(open, 0.5), Error);
    Mesh floating = make_cube(10, {0, 0, 3});
    CHECK_THROWS_AS((void)section_mesh(floating, 0.5), Error);
}

TEST_CASE("supports: table plate gets pillars, leg region does not") {
    Mesh table = make_table();
    SupportSpec spec;
    Mesh with = generate_supports(table, spec);
    CHECK(with.size() > table.size());
    double added = signed_volume(with) - signed_volume(table);
    CHECK(added > 0);
    // Pillars stop one clearance below the plate underside at z=5.
    Aabb box = bounding_box(with);
    CHECK(box.max.z == doctest::Approx(6.0));
    double top = 0;
    for (size_t i = table.size(); i < with.size(); ++i) {
        top = std::max({top, with.triangles[i].v0.z, with.triangles[i].v1.z,
                        with.triangles[i].v2.z});
    }
    CHECK(top == doctest::Approx(5.0 - spec.clearance));
    CHECK(is_closed(with));
}

TEST_CASE("supports: cube needs none") {
    Mesh cube = make_cube(10);
    Mesh with = generate_supports(cube, SupportSpec{});
    CHECK(with.size() == cube.size());
}

TEST_CASE("supports: 45 degree cone walls sit at the threshold and get none") {
    // Side normal z-component for a 45-degree cone equals cos(45); the
    // overhang test is strict, so the cone generates no pillars.
    Mesh cone = make_cone(6, 6, 64);
    Mesh with = generate_supports(cone, SupportSpec{});
    CHECK(with.size() == cone.size());
}

TEST_CASE("supports: crossbar overhang is detected, stem top is not") {
    Mesh t = make_tshape();
    Mesh with = generate_supports(t, SupportSpec{});
    CHECK(with.size() > t.size());
    // All pillar geometry lies under the crossbar wings, outside the stem.
    for (size_t i = t.size(); i < with.size(); ++i) {
        const Triangle& tri = with.triangles[i];
        for (const Vec3& v : {tri.v0, tri.v1, tri.v2}) {
            bool in_wing_x = v.x < 4 + 1e-9 || v.x > 8 - 1e-9;
            CHECK(in_wing_x);
            CHECK(v.z <= 6.0 - 0.3 + 1e-9);
        }
    }
}

TEST_CASE("guideline frame is constant across slabs and closed") {
    Mesh cube = make_cube(10);
    auto slabs = section_mesh(cube, 0.5);
    Aabb job = bounding_box(cube);
    GuideSpec guide;
    Aabb first_xy;
    for (auto& s : slabs) {
        s = add_guideline(std::move(s), guide, job);
        CHECK(is_closed(s.guide));
        Aabb g = bounding_box(s.guide);
        if (!first_xy.valid()) first_xy = g;
        CHECK(g.min.x == doctest::Approx(first_xy.min.x));
        CHECK(g.max.x == doctest::Approx(first_xy.max.x));
        CHECK(g.min.y == doctest::Approx(first_xy.min.y));
        CHECK(g.max.y == doctest::Approx(first_xy.max.y));
        CHECK(g.min.z == doctest::Approx(s.z_lo));
        CHECK(g.max.z == doctest::Approx(s.z_hi));
    }
    // Frame outer edge: part AABB grown by margin + wall, plus the corner dot.
    double expect_max_x = job.max.x + guide.margin + guide.wall  // frame
                          + guide.wall + guide.dot_size;         // dot offset
    CHECK(first_xy.max.x == doctest::Approx(expect_max_x));
}

TEST_CASE("split_slab_mesh separates frame, dot, and body") {
    Mesh cube = make_cube(10);
    auto slabs = section_mesh(cube, 0.5);
    Aabb job = bounding_box(cube);
    Slab s = add_guideline(std::move(slabs[4]), GuideSpec{}, job);
    Mesh combined = s.body;
    combined.triangles.insert(combined.triangles.end(), s.guide.triangles.begin(),
                              s.guide.triangles.end());
    auto bytes = write_stl(combined);
    SlabSplit split = split_slab_mesh(parse_stl(bytes));
    CHECK(signed_volume(split.body) == doctest::Approx(signed_volume(s.body)).epsilon(1e-5));
    CHECK(signed_volume(split.guide) ==
          doctest::Approx(signed_volume(s.guide)).epsilon(1e-5));
}

TEST_CASE("split_slab_mesh keeps support pillars with the body") {
    Mesh table = generate_supports(make_table(), SupportSpec{});
    auto slabs = section_mesh(table, 0.5);
    Aabb job = bounding_box(table);
    Slab s = add_guideline(std::move(slabs[2]), GuideSpec{}, job);  // has pillars
    Mesh combined = s.body;
    combined.triangles.insert(combined.triangles.end(), s.guide.triangles.begin(),
                              s.guide.triangles.end());
    SlabSplit split = split_slab_mesh(combined);
    CHECK(signed_volume(split.body) == doctest::Approx(signed_volume(s.body)));
    CHECK(signed_volume(split.guide) == doctest::Approx(signed_volume(s.guide)));
}
