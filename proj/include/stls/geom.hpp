#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace stls {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

struct Triangle {
    Vec3 normal;  // recomputed from winding on load; winding is authoritative
    Vec3 v0, v1, v2;

    Vec3 computed_normal() const { return (v1 - v0).cross(v2 - v0).normalized(); }
    double area() const { return 0.5 * (v1 - v0).cross(v2 - v0).norm(); }
    Vec3 centroid() const { return (v0 + v1 + v2) * (1.0 / 3.0); }
};

enum class Provenance { original, sectioned, support_augmented };

struct Mesh {
    std::vector<Triangle> triangles;
    Provenance provenance = Provenance::original;

    bool empty() const { return triangles.empty(); }
    size_t size() const { return triangles.size(); }
};

struct Aabb {
    Vec3 min{1e300, 1e300, 1e300};
    Vec3 max{-1e300, -1e300, -1e300};

    void extend(const Vec3& p) {
        min.x = std::min(min.x, p.x); min.y = std::min(min.y, p.y); min.z = std::min(min.z, p.z);
        max.x = std::max(max.x, p.x); max.y = std::max(max.y, p.y); max.z = std::max(max.z, p.z);
    }
    bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }
    Vec3 extents() const { return max - min; }
};

struct RigidTransform {
    std::array<std::array<double, 3>, 3> rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    Vec3 translation;

    Vec3 apply(const Vec3& p) const;
    Vec3 apply_direction(const Vec3& d) const;
    double rotation_determinant() const;

    static RigidTransform identity() { return {}; }
    // Intrinsic rotations applied X, then Y, then Z, angles in degrees.
    static RigidTransform from_euler_deg(double rx, double ry, double rz,
                                         const Vec3& translation = {});
};

Aabb bounding_box(const Mesh& mesh);
Mesh apply_transform(const Mesh& mesh, const RigidTransform& t);
Mesh drop_to_bed(const Mesh& mesh);

// Edges left unmatched after welding vertices at `tol`.
std::vector<std::pair<Vec3, Vec3>> boundary_edges(const Mesh& mesh, double tol = 1e-6);
bool is_closed(const Mesh& mesh, double tol = 1e-6);

// Divergence-theorem volume; requires a closed mesh.
double signed_volume(const Mesh& mesh);

// Welds nearby points to a shared index (tolerance-ball lookup on a hash grid).
class VertexWelder {
public:
    explicit VertexWelder(double tol = 1e-6) : tol_(tol) {}
    uint32_t index_of(const Vec3& p);
    const Vec3& point(uint32_t i) const { return points_[i]; }
    size_t size() const { return points_.size(); }

private:
    struct CellKey {
        int64_t x, y, z;
        bool operator==(const CellKey&) const = default;
    };
    struct CellHash {
        size_t operator()(const CellKey& k) const;
    };
    double tol_;
    std::vector<Vec3> points_;
    std::unordered_map<CellKey, std::vector<uint32_t>, CellHash> grid_;
};

}  // namespace stls
