#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stls/config.hpp"

namespace stls {

struct GcodeCommand {
    std::string code;               // "G1", "M104", ... uppercase
    std::map<char, double> params;  // parameter letter -> value
    std::string comment;            // trailing comment, without ';'
    int source_line = 0;

    bool has(char p) const { return params.count(p) != 0; }
    double get(char p, double fallback = 0) const {
        auto it = params.find(p);
        return it == params.end() ? fallback : it->second;
    }
};

enum class MarkerKind { header_start, header_end, layer, footer_start, footer_end };

struct Marker {
    MarkerKind kind;
    size_t pos;          // index of the next command in the command list
    uint32_t layer = 0;  // layer markers only
};

struct GcodeProgram {
    std::vector<GcodeCommand> commands;
    std::vector<Marker> markers;

    bool has_markers() const;
    std::string to_text() const;
};

enum class LayerPosition { first, intermediate, last };

GcodeProgram parse_gcode(const std::string& text);

// Drops the heat-up/homing header except on the first layer and the shutdown
// footer except on the last. Uses the emitted section markers when present,
// otherwise falls back to stripping by command class (maximal header-class
// prefix / footer-class suffix).
GcodeProgram remove_redundant(const GcodeProgram& program, LayerPosition position);

struct Violation {
    int source_line;
    std::string rule;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool accepted() const { return violations.empty(); }
    std::string summary() const;
};

// Allow-list validation against machine limits: unknown or forbidden commands,
// temperature setpoints beyond the maxima, motion outside the build volume,
// and decreasing cumulative extrusion.
ValidationReport validate(const GcodeProgram& program, const MachineSpec& machine);

}  // namespace stls
