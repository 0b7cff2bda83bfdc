#pragma once

#include <vector>

#include "stls/config.hpp"
#include "stls/contour.hpp"
#include "stls/gcode.hpp"
#include "stls/sectioner.hpp"

namespace stls {

enum class PathRole { perimeter, infill, support, guide };

struct Toolpath {
    PathRole role = PathRole::perimeter;
    std::vector<Vec2> points;  // closed loops repeat the first point at the end
    bool extruding = true;
};

// Inward offset of a region by `delta` (centerline insets for perimeters and
// the infill boundary). Degenerate results collapse to an empty list.
std::vector<PolygonGroup> deflate(const std::vector<PolygonGroup>& region, double delta);

// perimeter_count concentric loops per contour; loop i sits at inset
// nozzle/2 + i * extrusion_width.
std::vector<Toolpath> generate_perimeters(const std::vector<PolygonGroup>& region,
                                          const PrintConfig& config,
                                          const MachineSpec& machine);

// Rectilinear scanlines at fill_angle (+90 deg on odd layers), spacing
// extrusion_width / fill_density, clipped to `region` (even-odd).
std::vector<Toolpath> generate_infill(const std::vector<PolygonGroup>& region,
                                      const PrintConfig& config, const MachineSpec& machine,
                                      uint32_t layer_index);

GcodeProgram slice_slab(const Slab& slab, const PrintConfig& config,
                        const MachineSpec& machine, LayerPosition position);

// Whole-mesh single-pass slice: the "normal print" baseline. No guidelines,
// one header and one footer.
GcodeProgram monoslice(const Mesh& mesh, const PrintConfig& config,
                       const MachineSpec& machine);

// Shutdown block alone, for streaming after the final layer of a job whose
// per-layer programs all had their footers stripped.
GcodeProgram standalone_footer(const MachineSpec& machine);

// Analysis helpers over emitted programs.
std::vector<double> per_layer_extruded_length(const GcodeProgram& program,
                                              bool include_guide = true);
std::vector<double> per_layer_z(const GcodeProgram& program);

}  // namespace stls
