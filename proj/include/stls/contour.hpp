#pragma once

#include <vector>

#include "stls/geom.hpp"

namespace stls {

struct Vec2 {
    double x = 0, y = 0;
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

// Closed ring; last point is not repeated. Outer contours are CCW, holes CW.
struct Polygon {
    std::vector<Vec2> points;

    double signed_area() const;
    bool contains(const Vec2& p) const;  // even-odd test on this ring alone
    double perimeter() const;
};

// One material region: outer ring (CCW) plus its immediate holes (CW).
struct PolygonGroup {
    Polygon outer;
    std::vector<Polygon> holes;
};

struct Segment2 {
    Vec2 a, b;
};

// Plane/mesh intersection at height z. Segments are directed so that material
// lies to the left; chaining therefore yields CCW outer contours and CW holes.
// Throws on open chains (non-manifold cut), reporting the gap endpoints.
std::vector<Polygon> cross_section(const Mesh& mesh, double z, double weld_tol = 1e-6);

// Chains directed segments into closed rings (same contract as cross_section).
std::vector<Polygon> chain_segments(const std::vector<Segment2>& segments, double z_label,
                                    double weld_tol = 1e-6);

// Groups rings by containment parity; orientations are normalized from nesting
// depth (even depth CCW, odd depth CW).
std::vector<PolygonGroup> group_by_nesting(std::vector<Polygon> rings);

}  // namespace stls
