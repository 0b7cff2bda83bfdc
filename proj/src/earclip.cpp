#include "stls/earclip.hpp"

#include <algorithm>

namespace stls {

namespace {

double cross3(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b - a).cross(c - a);
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
    const double eps = 1e-12;
    double d1 = cross3(a, b, p);
    double d2 = cross3(b, c, p);
    double d3 = cross3(c, a, p);
    return d1 >= -eps && d2 >= -eps && d3 >= -eps;
}

bool same_point(const Vec2& a, const Vec2& b) {
    return std::abs(a.x - b.x) < 1e-12 && std::abs(a.y - b.y) < 1e-12;
}

// Joins one hole (CW) into the outer ring (CCW) with a visibility bridge
// cast in +x from the hole's rightmost vertex.
std::vector<Vec2> merge_hole(const std::vector<Vec2>& outer, const std::vector<Vec2>& hole) {
    size_t mi = 0;
    for (size_t i = 1; i < hole.size(); ++i)
        if (hole[i].x > hole[mi].x) mi = i;
    const Vec2 M = hole[mi];

    // Closest intersection of the ray with an outer edge, to the right of M.
    double best_x = 1e300;
    size_t best_edge = SIZE_MAX;
    Vec2 I{};
    for (size_t i = 0; i < outer.size(); ++i) {
        const Vec2& a = outer[i];
        const Vec2& b = outer[(i + 1) % outer.size()];
        if ((a.y > M.y) == (b.y > M.y)) continue;
        double x = a.x + (b.x - a.x) * (M.y - a.y) / (b.y - a.y);
        if (x >= M.x - 1e-12 && x < best_x) {
            best_x = x;
            best_edge = i;
            I = {x, M.y};
        }
    }
    if (best_edge == SIZE_MAX) throw Error("triangulate: hole outside outer ring");

    const Vec2& a = outer[best_edge];
    const Vec2& b = outer[(best_edge + 1) % outer.size()];
    bool vertex_hit = same_point(I, a) || same_point(I, b);
    size_t bridge = same_point(I, a)                     ? best_edge
                    : same_point(I, b)                   ? (best_edge + 1) % outer.size()
                    : (a.x > b.x ? best_edge : (best_edge + 1) % outer.size());
    // If a reflex vertex blocks the bridge, reroute through the blocking
    // vertex closest in angle to the ray.  A direct vertex hit needs no
    // reroute, and its I==P triangle would degenerate to a segment.
    if (!vertex_hit) {
        const Vec2 P = outer[bridge];
        double best_metric = 1e300;
        for (size_t i = 0; i < outer.size(); ++i) {
            if (i == bridge) continue;
            const Vec2& r = outer[i];
            if (same_point(r, M) || same_point(r, P)) continue;
            if (!point_in_triangle(r, M, I, P) && !point_in_triangle(r, M, P, I)) continue;
            double dx = r.x - M.x;
            if (dx <= 0) continue;
            double metric = std::abs(r.y - M.y) / dx;  // tangent of angle off the ray
            if (metric < best_metric) {
                best_metric = metric;
                bridge = i;
            }
        }
    }

    std::vector<Vec2> merged;
    merged.reserve(outer.size() + hole.size() + 2);
    for (size_t i = 0; i <= bridge; ++i) merged.push_back(outer[i]);
    for (size_t i = 0; i <= hole.size(); ++i) merged.push_back(hole[(mi + i) % hole.size()]);
    merged.push_back(outer[bridge]);
    for (size_t i = bridge + 1; i < outer.size(); ++i) merged.push_back(outer[i]);
    return merged;
}

}  // namespace

std::vector<std::array<Vec2, 3>> triangulate(const PolygonGroup& group) {
    std::vector<Vec2> poly = group.outer.points;
    if (poly.size() < 3) return {};

    // Merge holes right-to-left so each bridge ray cannot hit a pending hole.
    std::vector<Polygon> holes = group.holes;
    std::sort(holes.begin(), holes.end(), [](const Polygon& a, const Polygon& b) {
        auto max_x = [](const Polygon& p) {
            double m = -1e300;
            for (const auto& v : p.points) m = std::max(m, v.x);
            return m;
        };
        return max_x(a) > max_x(b);
    });
    for (const auto& h : holes) poly = merge_hole(poly, h.points);

    size_t n = poly.size();
    std::vector<size_t> next(n), prev(n);
    for (size_t i = 0; i < n; ++i) {
        next[i] = (i + 1) % n;
        prev[i] = (i + n - 1) % n;
    }

    auto is_ear = [&](size_t i) {
        const Vec2& a = poly[prev[i]];
        const Vec2& b = poly[i];
        const Vec2& c = poly[next[i]];
        if (cross3(a, b, c) <= 1e-12) return false;
        for (size_t j = next[next[i]]; j != prev[i]; j = next[j]) {
            const Vec2& p = poly[j];
            if (same_point(p, a) || same_point(p, b) || same_point(p, c)) continue;
            if (point_in_triangle(p, a, b, c)) return false;
        }
        return true;
    };

    std::vector<std::array<Vec2, 3>> out;
    size_t remaining = n;
    size_t i = 0;
    size_t since_progress = 0;
    while (remaining > 3) {
        if (is_ear(i)) {
            out.push_back({poly[prev[i]], poly[i], poly[next[i]]});
            next[prev[i]] = next[i];
            prev[next[i]] = prev[i];
            i = prev[i];
            remaining--;
            since_progress = 0;
        } else {
            i = next[i];
            if (++since_progress > remaining) {
                // Degenerate leftovers (collinear slivers): clip any convex
                // corner to guarantee termination.
                size_t j = i;
                bool clipped = false;
                for (size_t k = 0; k < remaining; ++k, j = next[j]) {
                    if (cross3(poly[prev[j]], poly[j], poly[next[j]]) > 0) {
                        out.push_back({poly[prev[j]], poly[j], poly[next[j]]});
                        next[prev[j]] = next[j];
                        prev[next[j]] = prev[j];
                        i = prev[j];
                        remaining--;
                        clipped = true;
                        break;
                    }
                }
                if (!clipped) return out;  // all collinear; nothing with area left
                since_progress = 0;
            }
        }
    }
    if (remaining == 3) out.push_back({poly[prev[i]], poly[i], poly[next[i]]});
    return out;
}

}  // namespace stls
