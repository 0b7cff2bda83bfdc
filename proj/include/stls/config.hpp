#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "stls/geom.hpp"

namespace stls {

// Design-choice parameters. These are the only settings a client may send;
// machine-choice settings stay on the manufacturer side.
struct PrintConfig {
    double layer_height = 0.3;
    double fill_density = 1.0;  // fraction in [0,1]
    double fill_angle = 0.0;    // degrees
    std::string fill_pattern = "rectilinear";
    int perimeter_count = 1;
    double z_offset = 0.0;  // running, advanced by the session per layer
    double z_allowance = 0.0;
    enum class Seam { nearest, fixed } seam = Seam::nearest;

    void validate() const;
    std::string serialize() const;  // wire/file form, design-choice keys only
    static PrintConfig parse(const std::string& text);
};

struct MachineSpec {
    double bed_x = 220, bed_y = 220, max_z = 250;
    double nozzle_diameter = 0.4;
    double filament_diameter = 1.75;
    double max_hotend_temp = 260, max_bed_temp = 100;
    double hotend_temp = 210, bed_temp = 60;
    int fan_speed = 255;
    double travel_feed = 6000, print_feed = 1800, first_layer_feed = 900;
    double layer_height_min = 0.1, layer_height_max = 0.4;
    std::set<std::string> allowed_commands = {"G0",   "G1",   "G12",  "G28",  "G92",
                                              "M82",  "M84",  "M104", "M106", "M107",
                                              "M109", "M140", "M190"};

    double extrusion_width() const { return 1.125 * nozzle_diameter; }
    void validate() const;
    std::string serialize() const;                     // full daemon-side file form
    std::string serialize_public() const;              // SPEC_REPLY subset only
    static MachineSpec parse(const std::string& text); // accepts either form
};

// key=value line grammar shared by config files and wire payloads.
std::map<std::string, std::string> parse_kv(const std::string& text);

}  // namespace stls
