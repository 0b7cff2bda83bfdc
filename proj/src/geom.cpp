#include "stls/geom.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace stls {

Vec3 RigidTransform::apply(const Vec3& p) const {
    Vec3 r = apply_direction(p);
    return r + translation;
}

Vec3 RigidTransform::apply_direction(const Vec3& d) const {
    const auto& m = rotation;
    return {m[0][0] * d.x + m[0][1] * d.y + m[0][2] * d.z,
            m[1][0] * d.x + m[1][1] * d.y + m[1][2] * d.z,
            m[2][0] * d.x + m[2][1] * d.y + m[2][2] * d.z};
}

double RigidTransform::rotation_determinant() const {
    const auto& m = rotation;
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

static std::array<std::array<double, 3>, 3> mat_mul(
    const std::array<std::array<double, 3>, 3>& a,
    const std::array<std::array<double, 3>, 3>& b) {
    std::array<std::array<double, 3>, 3> r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
    return r;
}

RigidTransform RigidTransform::from_euler_deg(double rx, double ry, double rz,
                                              const Vec3& translation) {
    const double d2r = M_PI / 180.0;
    double cx = std::cos(rx * d2r), sx = std::sin(rx * d2r);
    double cy = std::cos(ry * d2r), sy = std::sin(ry * d2r);
    double cz = std::cos(rz * d2r), sz = std::sin(rz * d2r);
    std::array<std::array<double, 3>, 3> Rx{{{1, 0, 0}, {0, cx, -sx}, {0, sx, cx}}};
    std::array<std::array<double, 3>, 3> Ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
    std::array<std::array<double, 3>, 3> Rz{{{cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1}}};
    RigidTransform t;
    t.rotation = mat_mul(Rz, mat_mul(Ry, Rx));
    t.translation = translation;
    return t;
}

Aabb bounding_box(const Mesh& mesh) {
    Aabb box;
    for (const auto& t : mesh.triangles) {
        box.extend(t.v0);
        box.extend(t.v1);
        box.extend(t.v2);
    }
    return box;
}

Mesh apply_transform(const Mesh& mesh, const RigidTransform& t) {
    if (std::abs(t.rotation_determinant() - 1.0) > 1e-9)
        throw Error("apply_transform: rotation is not a proper rotation");
    Mesh out;
    out.provenance = mesh.provenance;
    out.triangles.reserve(mesh.size());
    for (const auto& tr : mesh.triangles) {
        Triangle n;
        n.v0 = t.apply(tr.v0);
        n.v1 = t.apply(tr.v1);
        n.v2 = t.apply(tr.v2);
        n.normal = n.computed_normal();
        out.triangles.push_back(n);
    }
    return out;
}

Mesh drop_to_bed(const Mesh& mesh) {
    if (mesh.empty()) throw Error("drop_to_bed: empty mesh");
    Aabb box = bounding_box(mesh);
    RigidTransform t;
    t.translation = {0, 0, -box.min.z};
    return apply_transform(mesh, t);
}

size_t VertexWelder::CellHash::operator()(const CellKey& k) const {
    size_t h = std::hash<int64_t>()(k.x);
    h = h * 1000003u ^ std::hash<int64_t>()(k.y);
    h = h * 1000003u ^ std::hash<int64_t>()(k.z);
    return h;
}

uint32_t VertexWelder::index_of(const Vec3& p) {
    const double cell = tol_ * 2.0;
    int64_t cx = (int64_t)std::floor(p.x / cell);
    int64_t cy = (int64_t)std::floor(p.y / cell);
    int64_t cz = (int64_t)std::floor(p.z / cell);
    for (int64_t dx = -1; dx <= 1; ++dx)
        for (int64_t dy = -1; dy <= 1; ++dy)
            for (int64_t dz = -1; dz <= 1; ++dz) {
                auto it = grid_.find({cx + dx, cy + dy, cz + dz});
                if (it == grid_.end()) continue;
                for (uint32_t idx : it->second) {
                    const Vec3& q = points_[idx];
                    if (std::abs(q.x - p.x) <= tol_ && std::abs(q.y - p.y) <= tol_ &&
                        std::abs(q.z - p.z) <= tol_)
                        return idx;
                }
            }
    uint32_t idx = (uint32_t)points_.size();
    points_.push_back(p);
    grid_[{cx, cy, cz}].push_back(idx);
    return idx;
}

std::vector<std::pair<Vec3, Vec3>> boundary_edges(const Mesh& mesh, double tol) {
    VertexWelder welder(tol);
    // Count of directed edge (a,b) minus count of (b,a); nonzero entries are boundary.
    std::map<std::pair<uint32_t, uint32_t>, int> edges;
    for (const auto& t : mesh.triangles) {
        uint32_t i0 = welder.index_of(t.v0);
        uint32_t i1 = welder.index_of(t.v1);
        uint32_t i2 = welder.index_of(t.v2);
        uint32_t idx[3] = {i0, i1, i2};
        for (int e = 0; e < 3; ++e) {
            uint32_t a = idx[e], b = idx[(e + 1) % 3];
            if (a == b) continue;
            if (a < b)
                edges[{a, b}] += 1;
            else
                edges[{b, a}] -= 1;
        }
    }
    std::vector<std::pair<Vec3, Vec3>> out;
    for (const auto& [key, count] : edges) {
        for (int i = 0; i < std::abs(count); ++i)
            out.emplace_back(welder.point(key.first), welder.point(key.second));
    }
    return out;
}

bool is_closed(const Mesh& mesh, double tol) {
    return !mesh.empty() && boundary_edges(mesh, tol).empty();
}

double signed_volume(const Mesh& mesh) {
    auto open = boundary_edges(mesh);
    if (mesh.empty() || !open.empty()) {
        std::ostringstream msg;
        msg << "signed_volume: mesh is not closed (" << open.size() << " boundary edges";
        for (size_t i = 0; i < std::min<size_t>(open.size(), 4); ++i)
            msg << "; (" << open[i].first.x << "," << open[i].first.y << ","
                << open[i].first.z << ")->(" << open[i].second.x << ","
                << open[i].second.y << "," << open[i].second.z << ")";
        msg << ")";
        throw Error(msg.str());
    }
    double v = 0;
    for (const auto& t : mesh.triangles) v += t.v0.dot(t.v1.cross(t.v2)) / 6.0;
    return v;
}

}  // namespace stls
