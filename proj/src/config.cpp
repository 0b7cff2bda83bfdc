#include "stls/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stls {

namespace {

const std::set<std::string> kMachineChoiceKeys = {
    "bed_x",          "bed_y",          "max_z",           "nozzle_diameter",
    "filament_diameter", "max_hotend_temp", "max_bed_temp", "hotend_temp",
    "bed_temp",       "fan_speed",      "travel_feed",     "print_feed",
    "first_layer_feed", "layer_height_min", "layer_height_max", "allowed_commands"};

double to_real(const std::map<std::string, std::string>& kv, const std::string& key,
               double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw Error("config: bad numeric value for " + key + ": '" + it->second + "'");
    }
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config: line " + std::to_string(lineno) + " is not key=value: '" +
                        line + "'");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

void PrintConfig::validate() const {
    if (layer_height <= 0) throw Error("config: layer_height must be positive");
    if (fill_density < 0 || fill_density > 1)
        throw Error("config: fill_density must be in [0,1]");
    if (fill_pattern != "rectilinear")
        throw Error("config: unsupported fill_pattern '" + fill_pattern + "'");
    if (perimeter_count < 0) throw Error("config: perimeter_count must be >= 0");
    if (z_offset < 0) throw Error("config: z_offset must be >= 0");
    double layers = z_offset / layer_height;
    if (std::abs(layers - std::round(layers)) > 1e-9 / layer_height)
        throw Error("config: z_offset is not a multiple of layer_height");
}

std::string PrintConfig::serialize() const {
    std::ostringstream out;
    out.precision(12);
    out << "layer_height=" << layer_height << "\n"
        << "fill_density=" << fill_density << "\n"
        << "fill_angle=" << fill_angle << "\n"
        << "fill_pattern=" << fill_pattern << "\n"
        << "perimeter_count=" << perimeter_count << "\n";
    return out.str();
}

PrintConfig PrintConfig::parse(const std::string& text) {
    auto kv = parse_kv(text);
    for (const auto& [key, value] : kv)
        if (kMachineChoiceKeys.count(key))
            throw Error("config: '" + key +
                        "' is a machine-choice parameter and may not appear in a client "
                        "config");
    PrintConfig c;
    c.layer_height = to_real(kv, "layer_height", c.layer_height);
    c.fill_density = to_real(kv, "fill_density", c.fill_density);
    c.fill_angle = to_real(kv, "fill_angle", c.fill_angle);
    if (kv.count("fill_pattern")) c.fill_pattern = kv.at("fill_pattern");
    c.perimeter_count = (int)to_real(kv, "perimeter_count", c.perimeter_count);
    c.validate();
    return c;
}

void MachineSpec::validate() const {
    if (hotend_temp > max_hotend_temp)
        throw Error("machine: hotend_temp exceeds max_hotend_temp");
    if (bed_temp > max_bed_temp) throw Error("machine: bed_temp exceeds max_bed_temp");
    if (layer_height_min > layer_height_max)
        throw Error("machine: layer_height_min exceeds layer_height_max");
    if (bed_x <= 0 || bed_y <= 0 || max_z <= 0) throw Error("machine: bad build volume");
    if (nozzle_diameter <= 0 || filament_diameter <= 0)
        throw Error("machine: bad nozzle/filament diameter");
}

std::string MachineSpec::serialize_public() const {
    std::ostringstream out;
    out.precision(12);
    out << "bed_x=" << bed_x << "\nbed_y=" << bed_y << "\nmax_z=" << max_z
        << "\nnozzle_diameter=" << nozzle_diameter
        << "\nfilament_diameter=" << filament_diameter
        << "\nlayer_height_min=" << layer_height_min
        << "\nlayer_height_max=" << layer_height_max
        << "\nmax_hotend_temp=" << max_hotend_temp << "\nmax_bed_temp=" << max_bed_temp
        << "\n";
    return out.str();
}

std::string MachineSpec::serialize() const {
    std::ostringstream out;
    out.precision(12);
    out << serialize_public() << "hotend_temp=" << hotend_temp << "\nbed_temp=" << bed_temp
        << "\nfan_speed=" << fan_speed << "\ntravel_feed=" << travel_feed
        << "\nprint_feed=" << print_feed << "\nfirst_layer_feed=" << first_layer_feed
        << "\nallowed_commands=";
    bool first = true;
    for (const auto& c : allowed_commands) {
        if (!first) out << ",";
        out << c;
        first = false;
    }
    out << "\n";
    return out.str();
}

MachineSpec MachineSpec::parse(const std::string& text) {
    auto kv = parse_kv(text);
    MachineSpec m;
    m.bed_x = to_real(kv, "bed_x", m.bed_x);
    m.bed_y = to_real(kv, "bed_y", m.bed_y);
    m.max_z = to_real(kv, "max_z", m.max_z);
    m.nozzle_diameter = to_real(kv, "nozzle_diameter", m.nozzle_diameter);
    m.filament_diameter = to_real(kv, "filament_diameter", m.filament_diameter);
    m.max_hotend_temp = to_real(kv, "max_hotend_temp", m.max_hotend_temp);
    m.max_bed_temp = to_real(kv, "max_bed_temp", m.max_bed_temp);
    m.hotend_temp = to_real(kv, "hotend_temp", m.hotend_temp);
    m.bed_temp = to_real(kv, "bed_temp", m.bed_temp);
    m.fan_speed = (int)to_real(kv, "fan_speed", m.fan_speed);
    m.travel_feed = to_real(kv, "travel_feed", m.travel_feed);
    m.print_feed = to_real(kv, "print_feed", m.print_feed);
    m.first_layer_feed = to_real(kv, "first_layer_feed", m.first_layer_feed);
    m.layer_height_min = to_real(kv, "layer_height_min", m.layer_height_min);
    m.layer_height_max = to_real(kv, "layer_height_max", m.layer_height_max);
    if (kv.count("allowed_commands")) {
        m.allowed_commands.clear();
        std::istringstream list(kv.at("allowed_commands"));
        std::string item;
        while (std::getline(list, item, ',')) {
            item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
            if (!item.empty()) m.allowed_commands.insert(item);
        }
    }
    m.validate();
    return m;
}

}  // namespace stls
