#include "stls/slicer.hpp"

#include <algorithm>
#include <cmath>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

namespace stls {

namespace bg = boost::geometry;

namespace {

using BoostPt = bg::model::d2::point_xy<double>;
using BoostPoly = bg::model::polygon<BoostPt>;  // clockwise outer, closed
using BoostMPoly = bg::model::multi_polygon<BoostPoly>;

// Mesh sectioning leaves runs of collinear points on straight edges (triangle
// diagonals, slab clip seams); the negative miter buffer is unstable on them.
Polygon cull_collinear(const Polygon& in, double tol = 1e-9) {
    const auto& p = in.points;
    size_t n = p.size();
    if (n < 4) return in;
    Polygon out;
    for (size_t i = 0; i < n; ++i) {
        Vec2 a = p[(i + n - 1) % n], b = p[i], c = p[(i + 1) % n];
        Vec2 ac = c - a;
        double len = ac.norm();
        double dev = len < 1e-12 ? (b - a).norm() : std::abs(ac.cross(b - a)) / len;
        if (dev > tol) out.points.push_back(b);
    }
    return out.points.size() >= 3 ? out : in;
}

BoostPoly to_boost(const PolygonGroup& g) {
    BoostPoly p;
    for (const auto& v : cull_collinear(g.outer).points)
        bg::append(p.outer(), BoostPt{v.x, v.y});
    p.inners().resize(g.holes.size());
    for (size_t i = 0; i < g.holes.size(); ++i)
        for (const auto& v : cull_collinear(g.holes[i]).points)
            bg::append(p.inners()[i], BoostPt{v.x, v.y});
    bg::correct(p);
    return p;
}

Polygon from_boost_ring(const auto& ring, bool want_ccw) {
    Polygon out;
    for (const auto& pt : ring) out.points.push_back({bg::get<0>(pt), bg::get<1>(pt)});
    if (!out.points.empty()) out.points.pop_back();  // drop closing point
    if ((out.signed_area() > 0) != want_ccw)
        std::reverse(out.points.begin(), out.points.end());
    return out;
}

double round_to(double v, double quantum) { return std::round(v / quantum) * quantum; }

}  // namespace

std::vector<PolygonGroup> deflate(const std::vector<PolygonGroup>& region, double delta) {
    BoostMPoly input;
    for (const auto& g : region) input.push_back(to_boost(g));
    BoostMPoly out;
    bg::strategy::buffer::distance_symmetric<double> dist(-delta);
    bg::strategy::buffer::join_miter join;
    bg::strategy::buffer::end_flat end;
    bg::strategy::buffer::point_square point;
    bg::strategy::buffer::side_straight side;
    bg::buffer(input, out, dist, side, join, end, point);
    std::vector<PolygonGroup> result;
    for (const auto& p : out) {
        PolygonGroup g;
        g.outer = from_boost_ring(p.outer(), true);
        if (g.outer.points.size() < 3 || std::abs(g.outer.signed_area()) < 1e-9) continue;
        for (const auto& inner : p.inners()) {
            Polygon h = from_boost_ring(inner, false);
            if (h.points.size() >= 3 && std::abs(h.signed_area()) > 1e-9)
                g.holes.push_back(std::move(h));
        }
        result.push_back(std::move(g));
    }
    return result;
}

std::vector<Toolpath> generate_perimeters(const std::vector<PolygonGroup>& region,
                                          const PrintConfig& config,
                                          const MachineSpec& machine) {
    std::vector<Toolpath> paths;
    double width = machine.extrusion_width();
    for (int i = 0; i < config.perimeter_count; ++i) {
        double inset = machine.nozzle_diameter / 2 + i * width;
        for (const auto& g : deflate(region, inset)) {
            auto add_loop = [&](const Polygon& ring) {
                Toolpath tp;
                tp.role = PathRole::perimeter;
                tp.points = ring.points;
                tp.points.push_back(ring.points.front());
                paths.push_back(std::move(tp));
            };
            add_loop(g.outer);
            for (const auto& h : g.holes) add_loop(h);
        }
    }
    return paths;
}

std::vector<Toolpath> generate_infill(const std::vector<PolygonGroup>& region,
                                      const PrintConfig& config, const MachineSpec& machine,
                                      uint32_t layer_index) {
    std::vector<Toolpath> paths;
    if (config.fill_density <= 0 || region.empty()) return paths;
    double width = machine.extrusion_width();
    double spacing = width / config.fill_density;
    double angle = (config.fill_angle + (layer_index % 2 ? 90.0 : 0.0)) * M_PI / 180.0;
    double c = std::cos(-angle), s = std::sin(-angle);

    // Rotate the region so scanlines are horizontal.
    std::vector<std::vector<Vec2>> rings;
    double ymin = 1e300, ymax = -1e300;
    auto add_ring = [&](const Polygon& ring) {
        std::vector<Vec2> r;
        for (const auto& p : ring.points) {
            Vec2 q{c * p.x - s * p.y, s * p.x + c * p.y};
            ymin = std::min(ymin, q.y);
            ymax = std::max(ymax, q.y);
            r.push_back(q);
        }
        rings.push_back(std::move(r));
    };
    for (const auto& g : region) {
        add_ring(g.outer);
        for (const auto& h : g.holes) add_ring(h);
    }

    double cb = std::cos(angle), sb = std::sin(angle);
    int line_no = 0;
    // A scanline exactly on ymax intersects nothing; stop short of it so the
    // f32 quantization of streamed layers cannot flip the last line in or out
    // when the region height is an exact multiple of the spacing.
    double ytop = std::max(ymin, ymax - 1e-4);
    for (double y = ymin; y <= ytop + 1e-9; y += spacing, ++line_no) {
        // Even-odd scanline: x intersections over all rings, half-open rule.
        std::vector<double> xs;
        for (const auto& r : rings) {
            for (size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
                const Vec2& a = r[i];
                const Vec2& b = r[j];
                if ((a.y > y) == (b.y > y)) continue;
                xs.push_back(a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y));
            }
        }
        std::sort(xs.begin(), xs.end());
        bool reverse = line_no % 2 != 0;  // serpentine
        for (size_t i = 0; i + 1 < xs.size(); i += 2) {
            size_t k = reverse ? xs.size() - 2 - i : i;
            double x0 = xs[k], x1 = xs[k + 1];
            if (x1 - x0 < 1e-6) continue;
            if (reverse) std::swap(x0, x1);
            Toolpath tp;
            tp.role = PathRole::infill;
            tp.points = {{cb * x0 - sb * y, sb * x0 + cb * y},
                         {cb * x1 - sb * y, sb * x1 + cb * y}};
            paths.push_back(std::move(tp));
        }
    }
    return paths;
}

namespace {

struct Emitter {
    GcodeProgram program;
    const MachineSpec& machine;
    double e_accum = 0;
    Vec2 pos{0, 0};
    bool feed_travel_set = false, feed_print_set = false;

    explicit Emitter(const MachineSpec& m) : machine(m) {}

    void marker(MarkerKind kind, uint32_t layer = 0) {
        program.markers.push_back({kind, program.commands.size(), layer});
    }
    GcodeCommand& cmd(const std::string& code) {
        GcodeCommand c;
        c.code = code;
        program.commands.push_back(std::move(c));
        return program.commands.back();
    }
    void header() {
        marker(MarkerKind::header_start);
        cmd("G28");
        cmd("M140").params['S'] = machine.bed_temp;
        cmd("M104").params['S'] = machine.hotend_temp;
        cmd("M190").params['S'] = machine.bed_temp;
        cmd("M109").params['S'] = machine.hotend_temp;
        cmd("M82");
        cmd("G92").params['E'] = 0;
        marker(MarkerKind::header_end);
    }
    void footer() {
        marker(MarkerKind::footer_start);
        cmd("M104").params['S'] = 0;
        cmd("M140").params['S'] = 0;
        cmd("M107");
        auto& home = cmd("G0");
        home.params['X'] = 0;
        home.params['Y'] = 0;
        cmd("M84");
        marker(MarkerKind::footer_end);
    }
    void check_bounds(const Vec2& p, double z) {
        if (p.x < -1e-9 || p.x > machine.bed_x + 1e-9 || p.y < -1e-9 ||
            p.y > machine.bed_y + 1e-9 || z < -1e-9 || z > machine.max_z + 1e-9)
            throw Error("slice: toolpath exceeds bed bounds at (" + std::to_string(p.x) +
                        "," + std::to_string(p.y) + "," + std::to_string(z) + ")");
    }
    void travel(const Vec2& to, double z) {
        check_bounds(to, z);
        auto& c = cmd("G0");
        if (!feed_travel_set) {
            c.params['F'] = std::round(machine.travel_feed);
            feed_travel_set = true;
        }
        c.params['X'] = round_to(to.x, 1e-3);
        c.params['Y'] = round_to(to.y, 1e-3);
        c.params['Z'] = round_to(z, 1e-3);
        pos = {c.params['X'], c.params['Y']};
    }
    void extrude(const Vec2& to, double z, double h, double feed, const char* note) {
        check_bounds(to, z);
        auto& c = cmd("G1");
        if (!feed_print_set) {
            c.params['F'] = std::round(feed);
            feed_print_set = true;
        }
        c.params['X'] = round_to(to.x, 1e-3);
        c.params['Y'] = round_to(to.y, 1e-3);
        c.params['Z'] = round_to(z, 1e-3);
        Vec2 target{c.params['X'], c.params['Y']};
        double len = (target - pos).norm();
        double width = machine.extrusion_width();
        double r = machine.filament_diameter / 2;
        e_accum += len * h * width / (M_PI * r * r);
        c.params['E'] = round_to(e_accum, 1e-5);
        if (note) c.comment = note;
        pos = target;
    }
    // Rotates a closed loop so it starts at the vertex nearest `pos`
    // (deterministic tie-break: lowest vertex index).
    static std::vector<Vec2> seam_rotate(const std::vector<Vec2>& loop, const Vec2& from) {
        size_t n = loop.size() - 1;  // last repeats first
        size_t best = 0;
        double best_d = 1e300;
        for (size_t i = 0; i < n; ++i) {
            double d = (loop[i] - from).norm();
            if (d < best_d - 1e-12) {
                best_d = d;
                best = i;
            }
        }
        std::vector<Vec2> out;
        out.reserve(loop.size());
        for (size_t i = 0; i <= n; ++i) out.push_back(loop[(best + i) % n]);
        return out;
    }
    void emit_paths(const std::vector<Toolpath>& paths, double z, double h, double feed,
                    const PrintConfig& config) {
        for (const auto& tp : paths) {
            if (tp.points.size() < 2) continue;
            std::vector<Vec2> pts = tp.points;
            bool closed = (pts.front() - pts.back()).norm() < 1e-9;
            if (closed && config.seam == PrintConfig::Seam::nearest)
                pts = seam_rotate(pts, pos);
            const char* note = tp.role == PathRole::guide ? "GUIDE" : nullptr;
            travel(pts[0], z);
            if (note) program.commands.back().comment = note;
            for (size_t i = 1; i < pts.size(); ++i) extrude(pts[i], z, h, feed, note);
        }
    }
};

void emit_layer(Emitter& em, const std::vector<PolygonGroup>& body_region,
                const std::vector<PolygonGroup>& guide_region, uint32_t layer_index,
                double z, double h, const PrintConfig& config, const MachineSpec& machine) {
    em.marker(MarkerKind::layer, layer_index);
    em.feed_print_set = false;  // re-announce feed per layer (first layer differs)
    double feed = layer_index == 0 ? machine.first_layer_feed : machine.print_feed;

    auto perims = generate_perimeters(body_region, config, machine);
    double width = machine.extrusion_width();
    double fill_inset = config.perimeter_count > 0
                            ? machine.nozzle_diameter / 2 +
                                  (config.perimeter_count - 0.5) * width
                            : width / 2;
    auto fill_region = deflate(body_region, fill_inset);
    auto infill = generate_infill(fill_region, config, machine, layer_index);

    std::vector<Toolpath> guide_loops;
    if (!guide_region.empty()) {
        PrintConfig guide_cfg = config;
        guide_cfg.perimeter_count = 1;
        guide_loops = generate_perimeters(guide_region, guide_cfg, machine);
        for (auto& tp : guide_loops) tp.role = PathRole::guide;
    }

    const Toolpath* lead = !perims.empty()   ? &perims.front()
                           : !infill.empty() ? &infill.front()
                           : !guide_loops.empty() ? &guide_loops.front()
                                                  : nullptr;
    if (!lead) return;
    // The per-layer E reset must follow a non-header-class command so the
    // class-based fallback of remove_redundant leaves it in place; the travel
    // move to the first path point serves that purpose.
    em.travel(lead->points.front(), z);
    em.cmd("G92").params['E'] = 0;
    em.e_accum = 0;
    em.emit_paths(perims, z, h, feed, config);
    em.emit_paths(infill, z, h, feed, config);
    em.emit_paths(guide_loops, z, h, feed, config);
}

}  // namespace

GcodeProgram slice_slab(const Slab& slab, const PrintConfig& config,
                        const MachineSpec& machine, LayerPosition position) {
    config.validate();
    machine.validate();
    double h = config.layer_height;
    if (h < machine.layer_height_min - 1e-9 || h > machine.layer_height_max + 1e-9)
        throw Error("slice: layer height " + std::to_string(h) +
                    " outside machine range");
    double h_slab = slab.z_hi - slab.z_lo;
    // f32 STL coordinates can perturb the slab planes by ~1e-5 at bed scale.
    if (h_slab <= 0 || h_slab > h + 1e-4)
        throw Error("slice: slab thickness inconsistent with layer height");
    if (std::abs(config.z_offset - slab.index * h) > 1e-6)
        throw Error("slice: z_offset " + std::to_string(config.z_offset) +
                    " inconsistent with slab index " + std::to_string(slab.index));

    double z = config.z_offset + h_slab + config.z_allowance;
    double mid = slab.z_lo + h_slab / 2;

    auto body_region = group_by_nesting(cross_section(slab.body, mid));
    std::vector<PolygonGroup> guide_region;
    if (!slab.guide.empty()) guide_region = group_by_nesting(cross_section(slab.guide, mid));

    Emitter em(machine);
    em.header();
    emit_layer(em, body_region, guide_region, slab.index, z, h_slab, config, machine);
    em.footer();
    (void)position;  // headers/footers are always emitted; stripping is the gcode stage
    return std::move(em.program);
}

GcodeProgram monoslice(const Mesh& mesh, const PrintConfig& config,
                       const MachineSpec& machine) {
    config.validate();
    machine.validate();
    if (!is_closed(mesh)) throw Error("monoslice: mesh is not closed");
    Aabb box = bounding_box(mesh);
    if (std::abs(box.min.z) > 1e-6) throw Error("monoslice: mesh is not on the bed");
    double h = config.layer_height;
    if (h < machine.layer_height_min - 1e-9 || h > machine.layer_height_max + 1e-9)
        throw Error("monoslice: layer height outside machine range");
    double height = box.max.z;
    uint32_t k = (uint32_t)std::ceil(height / h - 1e-9);

    Emitter em(machine);
    em.header();
    for (uint32_t n = 0; n < k; ++n) {
        double z0 = n * h;
        double z1 = std::min((n + 1) * h, height);
        if (z1 - z0 < 1e-9) break;
        double mid = z0 + (z1 - z0) / 2;
        auto region = group_by_nesting(cross_section(mesh, mid));
        emit_layer(em, region, {}, n, z1 + config.z_allowance, z1 - z0, config, machine);
    }
    em.footer();
    return std::move(em.program);
}

GcodeProgram standalone_footer(const MachineSpec& machine) {
    Emitter em(machine);
    em.footer();
    return std::move(em.program);
}

std::vector<double> per_layer_extruded_length(const GcodeProgram& program,
                                              bool include_guide) {
    std::vector<double> lengths;
    size_t mi = 0;
    Vec2 pos{0, 0};
    double last_e = 0;
    for (size_t i = 0; i < program.commands.size(); ++i) {
        while (mi < program.markers.size() && program.markers[mi].pos <= i) {
            if (program.markers[mi].kind == MarkerKind::layer) lengths.push_back(0);
            mi++;
        }
        const auto& c = program.commands[i];
        if (c.code == "G92" && c.has('E')) last_e = c.get('E');
        if (c.code != "G0" && c.code != "G1") continue;
        Vec2 to{c.get('X', pos.x), c.get('Y', pos.y)};
        if (c.code == "G1" && c.has('E') && c.get('E') > last_e && !lengths.empty() &&
            (include_guide || c.comment != "GUIDE"))
            lengths.back() += (to - pos).norm();
        if (c.has('E')) last_e = c.get('E');
        pos = to;
    }
    return lengths;
}

std::vector<double> per_layer_z(const GcodeProgram& program) {
    std::vector<double> zs;
    size_t mi = 0;
    bool have = false;
    for (size_t i = 0; i < program.commands.size(); ++i) {
        while (mi < program.markers.size() && program.markers[mi].pos <= i) {
            if (program.markers[mi].kind == MarkerKind::layer) {
                zs.push_back(0);
                have = false;
            }
            mi++;
        }
        const auto& c = program.commands[i];
        if (!zs.empty() && !have && c.code == "G1" && c.has('E') && c.has('Z')) {
            zs.back() = c.get('Z');
            have = true;
        }
    }
    return zs;
}

}  // namespace stls
