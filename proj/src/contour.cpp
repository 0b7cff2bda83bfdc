#include "stls/contour.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace stls {

double Polygon::signed_area() const {
    double a = 0;
    for (size_t i = 0; i < points.size(); ++i) {
        const Vec2& p = points[i];
        const Vec2& q = points[(i + 1) % points.size()];
        a += p.cross(q);
    }
    return a / 2.0;
}

bool Polygon::contains(const Vec2& p) const {
    bool in = false;
    for (size_t i = 0, j = points.size() - 1; i < points.size(); j = i++) {
        const Vec2& a = points[i];
        const Vec2& b = points[j];
        if ((a.y > p.y) != (b.y > p.y) &&
            p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
            in = !in;
    }
    return in;
}

double Polygon::perimeter() const {
    double len = 0;
    for (size_t i = 0; i < points.size(); ++i)
        len += (points[(i + 1) % points.size()] - points[i]).norm();
    return len;
}

namespace {

// 2D point welder on a hash grid, tolerance ball lookup.
class Welder2 {
public:
    explicit Welder2(double tol) : tol_(tol) {}
    uint32_t index_of(const Vec2& p) {
        const double cell = tol_ * 2.0;
        int64_t cx = (int64_t)std::floor(p.x / cell);
        int64_t cy = (int64_t)std::floor(p.y / cell);
        for (int64_t dx = -1; dx <= 1; ++dx)
            for (int64_t dy = -1; dy <= 1; ++dy) {
                auto it = grid_.find(key(cx + dx, cy + dy));
                if (it == grid_.end()) continue;
                for (uint32_t idx : it->second) {
                    const Vec2& q = points_[idx];
                    if (std::abs(q.x - p.x) <= tol_ && std::abs(q.y - p.y) <= tol_)
                        return idx;
                }
            }
        uint32_t idx = (uint32_t)points_.size();
        points_.push_back(p);
        grid_[key(cx, cy)].push_back(idx);
        return idx;
    }
    const Vec2& point(uint32_t i) const { return points_[i]; }

private:
    static uint64_t key(int64_t x, int64_t y) {
        return (uint64_t)x * 73856093u ^ (uint64_t)y * 19349663u;
    }
    double tol_;
    std::vector<Vec2> points_;
    std::unordered_map<uint64_t, std::vector<uint32_t>> grid_;
};

}  // namespace

std::vector<Polygon> chain_segments(const std::vector<Segment2>& segments, double z_label,
                                    double weld_tol) {
    Welder2 welder(weld_tol);
    struct Edge {
        uint32_t from, to;
        bool used = false;
    };
    std::vector<Edge> edges;
    std::unordered_map<uint32_t, std::vector<size_t>> outgoing;
    for (const auto& s : segments) {
        uint32_t a = welder.index_of(s.a);
        uint32_t b = welder.index_of(s.b);
        if (a == b) continue;  // weld collapsed a micro segment
        outgoing[a].push_back(edges.size());
        edges.push_back({a, b});
    }
    std::vector<Polygon> rings;
    for (size_t start = 0; start < edges.size(); ++start) {
        if (edges[start].used) continue;
        Polygon ring;
        uint32_t first = edges[start].from;
        uint32_t cur = first;
        size_t ei = start;
        while (true) {
            edges[ei].used = true;
            ring.points.push_back(welder.point(cur));
            cur = edges[ei].to;
            if (cur == first) break;
            auto it = outgoing.find(cur);
            size_t next = SIZE_MAX;
            if (it != outgoing.end())
                for (size_t cand : it->second)
                    if (!edges[cand].used) {
                        next = cand;
                        break;
                    }
            if (next == SIZE_MAX) {
                std::ostringstream msg;
                const Vec2& gap = welder.point(cur);
                const Vec2& org = welder.point(first);
                msg << "cross_section: open chain at z=" << z_label << ", gap at ("
                    << gap.x << "," << gap.y << "), loop started at (" << org.x << ","
                    << org.y << ")";
                throw Error(msg.str());
            }
            ei = next;
        }
        if (ring.points.size() >= 3 && std::abs(ring.signed_area()) > 1e-10)
            rings.push_back(std::move(ring));
    }
    return rings;
}

std::vector<Polygon> cross_section(const Mesh& mesh, double z, double weld_tol) {
    const double eps = 1e-9;
    std::vector<Segment2> segments;
    for (const auto& t : mesh.triangles) {
        const Vec3* v[3] = {&t.v0, &t.v1, &t.v2};
        double d[3];
        int above = 0, below = 0;
        for (int i = 0; i < 3; ++i) {
            d[i] = v[i]->z - z;
            if (d[i] > eps) above++;
            else if (d[i] < -eps) below++;
        }
        if (above == 0 || below == 0) continue;  // touching or one-sided
        // Two crossing points on the triangle edges (a vertex on the plane
        // counts as a crossing point of both adjacent edges).
        Vec2 pts[2];
        int n = 0;
        for (int i = 0; i < 3 && n < 2; ++i) {
            int j = (i + 1) % 3;
            if (std::abs(d[i]) <= eps) {
                Vec2 p{v[i]->x, v[i]->y};
                if (n == 0 || std::abs(p.x - pts[0].x) > eps || std::abs(p.y - pts[0].y) > eps)
                    pts[n++] = p;
            } else if ((d[i] > eps && d[j] < -eps) || (d[i] < -eps && d[j] > eps)) {
                double f = d[i] / (d[i] - d[j]);
                pts[n++] = {v[i]->x + (v[j]->x - v[i]->x) * f,
                            v[i]->y + (v[j]->y - v[i]->y) * f};
            }
        }
        if (n < 2) continue;
        // Direct the segment so interior is on the left: along z-hat x normal.
        Vec3 nrm = t.computed_normal();
        Vec2 dir{-nrm.y, nrm.x};
        Vec2 seg = pts[1] - pts[0];
        if (seg.dot(dir) >= 0)
            segments.push_back({pts[0], pts[1]});
        else
            segments.push_back({pts[1], pts[0]});
    }
    return chain_segments(segments, z, weld_tol);
}

std::vector<PolygonGroup> group_by_nesting(std::vector<Polygon> rings) {
    size_t n = rings.size();
    std::vector<double> area(n);
    for (size_t i = 0; i < n; ++i) area[i] = std::abs(rings[i].signed_area());
    std::vector<int> depth(n, 0), parent(n, -1);
    for (size_t i = 0; i < n; ++i) {
        // Parent is the smallest ring strictly containing ring i.
        const Vec2 probe = rings[i].points[0];
        double best_area = 1e300;
        for (size_t j = 0; j < n; ++j) {
            if (i == j || area[j] <= area[i]) continue;
            if (rings[j].contains(probe) && area[j] < best_area) {
                best_area = area[j];
                parent[i] = (int)j;
            }
        }
    }
    for (size_t i = 0; i < n; ++i)
        for (int p = parent[i]; p != -1; p = parent[p]) depth[i]++;
    // Normalize orientation: even depth CCW (outer), odd depth CW (hole).
    for (size_t i = 0; i < n; ++i) {
        bool ccw = rings[i].signed_area() > 0;
        bool want_ccw = depth[i] % 2 == 0;
        if (ccw != want_ccw) std::reverse(rings[i].points.begin(), rings[i].points.end());
    }
    std::vector<PolygonGroup> groups;
    std::vector<int> group_of(n, -1);
    for (size_t i = 0; i < n; ++i) {
        if (depth[i] % 2 != 0) continue;
        group_of[i] = (int)groups.size();
        groups.push_back({rings[i], {}});
    }
    for (size_t i = 0; i < n; ++i) {
        if (depth[i] % 2 == 0) continue;
        groups[group_of[parent[i]]].holes.push_back(rings[i]);
    }
    return groups;
}

}  // namespace stls
