#include "stls/sectioner.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "stls/earclip.hpp"

namespace stls {

namespace {

constexpr double kEps = 1e-9;

void add_quad(Mesh& m, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    Triangle t1{{}, a, b, c};
    Triangle t2{{}, a, c, d};
    t1.normal = t1.computed_normal();
    t2.normal = t2.computed_normal();
    if (t1.area() > 1e-12) m.triangles.push_back(t1);
    if (t2.area() > 1e-12) m.triangles.push_back(t2);
}

void add_cap(Mesh& m, const std::vector<PolygonGroup>& groups, double z, bool up) {
    for (const auto& g : groups) {
        for (const auto& tri : triangulate(g)) {
            Triangle t;
            if (up) {
                t.v0 = {tri[0].x, tri[0].y, z};
                t.v1 = {tri[1].x, tri[1].y, z};
                t.v2 = {tri[2].x, tri[2].y, z};
            } else {
                t.v0 = {tri[0].x, tri[0].y, z};
                t.v1 = {tri[2].x, tri[2].y, z};
                t.v2 = {tri[1].x, tri[1].y, z};
            }
            t.normal = t.computed_normal();
            if (t.area() > 1e-12) m.triangles.push_back(t);
        }
    }
}

void add_walls(Mesh& m, const Polygon& ring, double z0, double z1) {
    for (size_t i = 0; i < ring.points.size(); ++i) {
        const Vec2& a = ring.points[i];
        const Vec2& b = ring.points[(i + 1) % ring.points.size()];
        add_quad(m, {a.x, a.y, z0}, {b.x, b.y, z0}, {b.x, b.y, z1}, {a.x, a.y, z1});
    }
}

// Clips one triangle to z0 <= z <= z1 and appends the pieces; cut segments at
// each plane are collected for capping. Faces coplanar with a cut plane are
// kept on the side where the material is (down-facing at z0, up-facing at z1).
void clip_triangle(const Triangle& t, double z0, double z1, Mesh& out,
                   std::vector<Segment2>& cuts_lo, std::vector<Segment2>& cuts_hi) {
    const Vec3* v[3] = {&t.v0, &t.v1, &t.v2};
    double zmin = std::min({t.v0.z, t.v1.z, t.v2.z});
    double zmax = std::max({t.v0.z, t.v1.z, t.v2.z});
    if (zmin > z1 + kEps || zmax < z0 - kEps) return;

    double nz = t.computed_normal().z;
    bool flat = zmax - zmin <= kEps;
    if (flat) {
        double z = (zmin + zmax) / 2;
        bool on_lo = std::abs(z - z0) <= kEps;
        bool on_hi = std::abs(z - z1) <= kEps;
        if (on_lo && !(nz < 0)) return;  // top face of material below the slab
        if (on_hi && !(nz > 0)) return;  // bottom face of material above the slab
        out.triangles.push_back(t);
        return;
    }

    // Sutherland-Hodgman against the two half-spaces; vertices within kEps of
    // a plane are snapped onto it.
    std::vector<Vec3> poly{*v[0], *v[1], *v[2]};
    for (int pass = 0; pass < 2; ++pass) {
        double plane = pass == 0 ? z0 : z1;
        double sign = pass == 0 ? 1.0 : -1.0;  // keep sign*(z-plane) >= 0
        std::vector<Vec3> next;
        std::vector<Vec3> cut_pts;
        for (size_t i = 0; i < poly.size(); ++i) {
            Vec3 a = poly[i];
            Vec3 b = poly[(i + 1) % poly.size()];
            double da = sign * (a.z - plane);
            double db = sign * (b.z - plane);
            if (std::abs(da) <= kEps) {
                a.z = plane;
                da = 0;
            }
            if (std::abs(db) <= kEps) b.z = plane;
            if (da >= 0) next.push_back(a);
            double dbs = sign * (b.z - plane);
            if ((da > 0 && dbs < 0) || (da < 0 && dbs > 0)) {
                double f = da / (da - dbs);
                Vec3 p = {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f, plane};
                next.push_back(p);
            }
        }
        poly = std::move(next);
        if (poly.size() < 3) return;
    }

    // Fan-triangulate the clipped polygon.
    for (size_t i = 1; i + 1 < poly.size(); ++i) {
        Triangle n{{}, poly[0], poly[i], poly[i + 1]};
        if (n.area() <= 1e-12) continue;
        n.normal = n.computed_normal();
        out.triangles.push_back(n);
    }

    // Cut segments, directed so material is to the left (viewed from +z).
    for (int pass = 0; pass < 2; ++pass) {
        double plane = pass == 0 ? z0 : z1;
        double d[3];
        int above = 0, below = 0;
        for (int i = 0; i < 3; ++i) {
            d[i] = v[i]->z - plane;
            if (d[i] > kEps) above++;
            else if (d[i] < -kEps) below++;
        }
        if (above == 0 || below == 0) continue;
        Vec2 pts[2];
        int n = 0;
        for (int i = 0; i < 3 && n < 2; ++i) {
            int j = (i + 1) % 3;
            if (std::abs(d[i]) <= kEps) {
                Vec2 p{v[i]->x, v[i]->y};
                if (n == 0 || std::abs(p.x - pts[0].x) > kEps ||
                    std::abs(p.y - pts[0].y) > kEps)
                    pts[n++] = p;
            } else if ((d[i] > kEps && d[j] < -kEps) || (d[i] < -kEps && d[j] > kEps)) {
                double f = d[i] / (d[i] - d[j]);
                pts[n++] = {v[i]->x + (v[j]->x - v[i]->x) * f,
                            v[i]->y + (v[j]->y - v[i]->y) * f};
            }
        }
        if (n < 2) continue;
        Vec3 nrm = t.computed_normal();
        Vec2 dir{-nrm.y, nrm.x};
        Segment2 s = (pts[1] - pts[0]).dot(dir) >= 0 ? Segment2{pts[0], pts[1]}
                                                     : Segment2{pts[1], pts[0]};
        (pass == 0 ? cuts_lo : cuts_hi).push_back(s);
    }
}

}  // namespace

Mesh make_box(const Vec3& lo, const Vec3& hi) {
    PolygonGroup g;
    g.outer.points = {{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}};
    return make_prism(g, lo.z, hi.z);
}

Mesh make_prism(const PolygonGroup& group, double z0, double z1) {
    Mesh m;
    add_walls(m, group.outer, z0, z1);
    for (const auto& h : group.holes) add_walls(m, h, z0, z1);
    std::vector<PolygonGroup> groups{group};
    add_cap(m, groups, z1, true);
    add_cap(m, groups, z0, false);
    return m;
}

Mesh generate_supports(const Mesh& mesh, const SupportSpec& spec) {
    if (!is_closed(mesh)) throw Error("generate_supports: mesh is not closed");
    Aabb box = bounding_box(mesh);
    if (box.min.z > 1e-6 || box.min.z < -1e-6)
        throw Error("generate_supports: mesh is not on the bed (min z = " +
                    std::to_string(box.min.z) + ")");

    const double cos_th = std::cos(spec.overhang_threshold_deg * M_PI / 180.0);
    const double pitch = spec.pillar_xy;

    // A face is already supported if up-facing material sits directly below
    // its centroid; such faces get no pillar (supports go to the bed only).
    auto supported_below = [&](const Vec2& p, double face_z) {
        for (const auto& t : mesh.triangles) {
            Vec3 n = t.computed_normal();
            if (n.z <= kEps) continue;
            Vec2 a{t.v0.x, t.v0.y}, b{t.v1.x, t.v1.y}, c{t.v2.x, t.v2.y};
            double d1 = (b - a).cross(p - a);
            double d2 = (c - b).cross(p - b);
            double d3 = (a - c).cross(p - c);
            bool inside = (d1 >= -kEps && d2 >= -kEps && d3 >= -kEps) ||
                          (d1 <= kEps && d2 <= kEps && d3 <= kEps);
            if (!inside) continue;
            // z on the triangle plane at p
            double denom = n.z;
            double z = t.v0.z - (n.x * (p.x - t.v0.x) + n.y * (p.y - t.v0.y)) / denom;
            if (z > 1e-6 && z <= face_z + 1e-6) return true;
        }
        return false;
    };

    std::map<std::pair<int64_t, int64_t>, double> cells;  // cell -> lowest face z
    for (const auto& t : mesh.triangles) {
        Vec3 n = t.computed_normal();
        if (-n.z <= cos_th) continue;  // not an overhang
        Vec3 c = t.centroid();
        if (c.z <= spec.clearance + 1e-6) continue;  // close enough to the bed
        if (supported_below({c.x, c.y}, c.z)) continue;
        std::pair<int64_t, int64_t> cell{(int64_t)std::floor(c.x / pitch),
                                         (int64_t)std::floor(c.y / pitch)};
        auto it = cells.find(cell);
        if (it == cells.end() || c.z < it->second) cells[cell] = c.z;
    }

    Mesh out = mesh;
    out.provenance = Provenance::support_augmented;
    // Pillar footprints are inset slightly inside their grid cell so adjacent
    // shells never share coincident walls.
    const double half = std::max(pitch / 2 - 0.05, pitch * 0.25);
    for (const auto& [cell, face_z] : cells) {
        double top = face_z - spec.clearance;
        if (top < 1e-6) continue;
        double cx = (cell.first + 0.5) * pitch;
        double cy = (cell.second + 0.5) * pitch;
        Mesh pillar = make_box({cx - half, cy - half, 0}, {cx + half, cy + half, top});
        out.triangles.insert(out.triangles.end(), pillar.triangles.begin(),
                             pillar.triangles.end());
    }
    return out;
}

std::vector<Slab> section_mesh(const Mesh& mesh, double h, double h_min, double h_max) {
    if (h <= 0) throw Error("section_mesh: layer height must be positive");
    if (h < h_min || h > h_max)
        throw Error("section_mesh: layer height " + std::to_string(h) +
                    " outside machine range [" + std::to_string(h_min) + ", " +
                    std::to_string(h_max) + "]");
    if (!is_closed(mesh)) throw Error("section_mesh: mesh is not closed");
    Aabb box = bounding_box(mesh);
    if (std::abs(box.min.z) > 1e-6) throw Error("section_mesh: mesh is not on the bed");

    double height = box.max.z;
    uint32_t k = (uint32_t)std::ceil(height / h - 1e-9);
    std::vector<Slab> slabs;
    slabs.reserve(k);
    for (uint32_t n = 0; n < k; ++n) {
        double z0 = n * h;
        double z1 = std::min((n + 1) * h, height);
        if (z1 - z0 < 1e-9) break;
        Slab slab;
        slab.index = n;
        slab.z_lo = z0;
        slab.z_hi = z1;
        slab.body.provenance = Provenance::sectioned;
        std::vector<Segment2> cuts_lo, cuts_hi;
        for (const auto& t : mesh.triangles)
            clip_triangle(t, z0, z1, slab.body, cuts_lo, cuts_hi);
        if (!cuts_lo.empty())
            add_cap(slab.body, group_by_nesting(chain_segments(cuts_lo, z0)), z0, false);
        if (!cuts_hi.empty())
            add_cap(slab.body, group_by_nesting(chain_segments(cuts_hi, z1)), z1, true);
        if (slab.body.empty()) continue;  // gap in z (e.g. between disjoint shells)
        slabs.push_back(std::move(slab));
    }
    return slabs;
}

SlabSplit split_slab_mesh(const Mesh& mesh) {
    SlabSplit out;
    if (mesh.empty()) return out;

    // Union-find over welded vertices, then components over triangles.
    VertexWelder welder;
    std::vector<std::array<uint32_t, 3>> tv(mesh.size());
    for (size_t i = 0; i < mesh.size(); ++i)
        tv[i] = {welder.index_of(mesh.triangles[i].v0),
                 welder.index_of(mesh.triangles[i].v1),
                 welder.index_of(mesh.triangles[i].v2)};
    std::vector<uint32_t> parent(welder.size());
    for (uint32_t i = 0; i < parent.size(); ++i) parent[i] = i;
    auto find = [&](uint32_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& t : tv) {
        parent[find(t[0])] = find(t[1]);
        parent[find(t[1])] = find(t[2]);
    }

    std::map<uint32_t, Aabb> boxes;
    for (size_t i = 0; i < mesh.size(); ++i) {
        Aabb& box = boxes[find(tv[i][0])];
        box.extend(mesh.triangles[i].v0);
        box.extend(mesh.triangles[i].v1);
        box.extend(mesh.triangles[i].v2);
    }
    uint32_t frame_root = boxes.begin()->first;
    double best = -1;
    for (const auto& [root, box] : boxes) {
        double area = (box.max.x - box.min.x) * (box.max.y - box.min.y);
        if (area > best) {
            best = area;
            frame_root = root;
        }
    }
    const Aabb& frame = boxes.at(frame_root);
    auto inside_frame = [&](const Aabb& box) {
        return box.min.x > frame.min.x + 1e-6 && box.max.x < frame.max.x - 1e-6 &&
               box.min.y > frame.min.y + 1e-6 && box.max.y < frame.max.y - 1e-6;
    };
    std::map<uint32_t, bool> is_body;
    for (const auto& [root, box] : boxes)
        is_body[root] = root != frame_root && inside_frame(box);
    for (size_t i = 0; i < mesh.size(); ++i)
        (is_body[find(tv[i][0])] ? out.body : out.guide)
            .triangles.push_back(mesh.triangles[i]);
    return out;
}

Slab add_guideline(Slab slab, const GuideSpec& guide, const Aabb& job_aabb) {
    if (!job_aabb.valid() || job_aabb.extents().x <= 0 || job_aabb.extents().y <= 0)
        throw Error("add_guideline: degenerate job bounding box");
    double ox0 = job_aabb.min.x - guide.margin - guide.wall;
    double oy0 = job_aabb.min.y - guide.margin - guide.wall;
    double ox1 = job_aabb.max.x + guide.margin + guide.wall;
    double oy1 = job_aabb.max.y + guide.margin + guide.wall;
    double ix0 = job_aabb.min.x - guide.margin;
    double iy0 = job_aabb.min.y - guide.margin;
    double ix1 = job_aabb.max.x + guide.margin;
    double iy1 = job_aabb.max.y + guide.margin;

    PolygonGroup frame;
    frame.outer.points = {{ox0, oy0}, {ox1, oy0}, {ox1, oy1}, {ox0, oy1}};
    Polygon hole;
    hole.points = {{ix0, iy0}, {ix0, iy1}, {ix1, iy1}, {ix1, iy0}};  // CW
    frame.holes.push_back(hole);

    slab.guide = make_prism(frame, slab.z_lo, slab.z_hi);

    // Debug dot: a small block diagonally outside the chosen frame corner.
    double gap = guide.wall;
    double d = guide.dot_size;
    double dx0, dy0;
    switch (guide.dot_corner) {
        case GuideSpec::Corner::NE: dx0 = ox1 + gap; dy0 = oy1 + gap; break;
        case GuideSpec::Corner::NW: dx0 = ox0 - gap - d; dy0 = oy1 + gap; break;
        case GuideSpec::Corner::SE: dx0 = ox1 + gap; dy0 = oy0 - gap - d; break;
        default: dx0 = ox0 - gap - d; dy0 = oy0 - gap - d; break;
    }
    Mesh dot = make_box({dx0, dy0, slab.z_lo}, {dx0 + d, dy0 + d, slab.z_hi});
    slab.guide.triangles.insert(slab.guide.triangles.end(), dot.triangles.begin(),
                                dot.triangles.end());
    return slab;
}

}  // namespace stls
