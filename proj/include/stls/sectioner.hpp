#pragma once

#include <vector>

#include "stls/contour.hpp"
#include "stls/geom.hpp"

namespace stls {

struct Slab {
    uint32_t index = 0;
    double z_lo = 0, z_hi = 0;
    Mesh body;   // closed; cut faces are capped
    Mesh guide;  // closed guideline frame + debug dot, constant XY across layers
};

struct SupportSpec {
    double overhang_threshold_deg = 45.0;  // angle off straight-down that still needs support
    double pillar_xy = 2.0;                // square pillar side, also the dedup grid pitch
    double clearance = 0.3;                // gap below the supported face, one layer height
};

struct GuideSpec {
    double margin = 2.0;  // gap between part AABB and border
    double wall = 1.0;    // border wall thickness
    double dot_size = 2.0;
    enum class Corner { NE, NW, SE, SW } dot_corner = Corner::NE;
};

// Square pillars from the bed up to clearance below each unsupported
// downward-facing region, deduplicated on an XY grid of pitch pillar_xy.
// Pillars are separate closed shells, not boolean-unioned with the part.
Mesh generate_supports(const Mesh& mesh, const SupportSpec& spec);

// Splits the mesh into ceil(height/h) closed slabs of thickness h (the top
// slab may be thinner); cut faces are capped by ear-clipping the cut contours.
std::vector<Slab> section_mesh(const Mesh& mesh, double h, double h_min = 0,
                               double h_max = 1e300);

Slab add_guideline(Slab slab, const GuideSpec& guide, const Aabb& job_aabb);

// Separates a received layer mesh into part material and guideline material.
// The connected component with the largest XY bounding rectangle is the guide
// frame; every component not strictly inside that rectangle (the frame itself
// and the corner dot) is guide, everything inside it is body.
struct SlabSplit {
    Mesh body, guide;
};
SlabSplit split_slab_mesh(const Mesh& mesh);

// Closed axis-aligned box, outward-facing.
Mesh make_box(const Vec3& lo, const Vec3& hi);

// Closed extrusion of a polygon-with-holes region between two z planes.
Mesh make_prism(const PolygonGroup& group, double z0, double z1);

}  // namespace stls
