#pragma once

#include <array>
#include <vector>

#include "stls/contour.hpp"

namespace stls {

// Ear-clipping triangulation of one outer ring (CCW) with holes (CW).
// Holes are first joined to the outer ring via visibility bridges; the
// resulting triangles are CCW.
std::vector<std::array<Vec2, 3>> triangulate(const PolygonGroup& group);

}  // namespace stls
