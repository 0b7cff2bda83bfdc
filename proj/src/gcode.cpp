#include "stls/gcode.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace stls {

namespace {

// Shortest representation that parses back to the same double.
std::string format_real(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

bool is_header_class(const GcodeCommand& c) {
    if (c.code == "G28" || c.code == "M104" || c.code == "M109" || c.code == "M140" ||
        c.code == "M190" || c.code == "M82" || c.code == "M83")
        return true;
    if (c.code == "G92" && c.has('E')) return true;
    return false;
}

bool is_footer_class(const GcodeCommand& c) {
    if (c.code == "M107" || c.code == "M84") return true;
    if ((c.code == "M104" || c.code == "M140") && c.get('S', -1) == 0) return true;
    if ((c.code == "G0" || c.code == "G1") && !c.has('E') && c.get('X', 1) == 0 &&
        c.get('Y', 1) == 0)
        return true;
    return false;
}

std::optional<Marker> parse_marker(const std::string& comment, size_t pos) {
    if (comment == "HEADER_START") return Marker{MarkerKind::header_start, pos};
    if (comment == "HEADER_END") return Marker{MarkerKind::header_end, pos};
    if (comment == "FOOTER_START") return Marker{MarkerKind::footer_start, pos};
    if (comment == "FOOTER_END") return Marker{MarkerKind::footer_end, pos};
    if (comment.rfind("LAYER ", 0) == 0) {
        Marker m{MarkerKind::layer, pos};
        m.layer = (uint32_t)std::stoul(comment.substr(6));
        return m;
    }
    return std::nullopt;
}

std::string marker_text(const Marker& m) {
    switch (m.kind) {
        case MarkerKind::header_start: return ";HEADER_START";
        case MarkerKind::header_end: return ";HEADER_END";
        case MarkerKind::footer_start: return ";FOOTER_START";
        case MarkerKind::footer_end: return ";FOOTER_END";
        case MarkerKind::layer: return ";LAYER " + std::to_string(m.layer);
    }
    return ";";
}

}  // namespace

bool GcodeProgram::has_markers() const {
    bool start = false, end = false;
    for (const auto& m : markers) {
        if (m.kind == MarkerKind::header_start) start = true;
        if (m.kind == MarkerKind::header_end) end = true;
    }
    return start && end;
}

std::string GcodeProgram::to_text() const {
    std::ostringstream out;
    size_t mi = 0;
    auto emit_markers_at = [&](size_t pos) {
        while (mi < markers.size() && markers[mi].pos == pos)
            out << marker_text(markers[mi++]) << "\n";
    };
    for (size_t i = 0; i < commands.size(); ++i) {
        emit_markers_at(i);
        const auto& c = commands[i];
        out << c.code;
        // X/Y/Z/E/F/S first in conventional order, anything else after.
        const std::string order = "XYZEFS";
        for (char p : order)
            if (c.has(p)) out << " " << p << format_real(c.get(p));
        for (const auto& [p, v] : c.params)
            if (order.find(p) == std::string::npos) out << " " << p << format_real(v);
        if (!c.comment.empty()) out << " ;" << c.comment;
        out << "\n";
    }
    emit_markers_at(commands.size());
    return out.str();
}

GcodeProgram parse_gcode(const std::string& text) {
    GcodeProgram program;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        // Split off the comment.
        std::string comment;
        size_t semi = line.find(';');
        if (semi != std::string::npos) {
            comment = line.substr(semi + 1);
            line = line.substr(0, semi);
        }
        // Trim.
        auto not_space = [](unsigned char c) { return !std::isspace(c); };
        line.erase(line.begin(), std::find_if(line.begin(), line.end(), not_space));
        line.erase(std::find_if(line.rbegin(), line.rend(), not_space).base(), line.end());
        while (!comment.empty() && std::isspace((unsigned char)comment.back()))
            comment.pop_back();
        while (!comment.empty() && std::isspace((unsigned char)comment.front()))
            comment.erase(comment.begin());

        if (line.empty()) {
            if (auto m = parse_marker(comment, program.commands.size()))
                program.markers.push_back(*m);
            continue;  // blank or comment-only line: no command
        }

        // Strip checksum ("*nn") and a leading line number ("Nnn").
        size_t star = line.find('*');
        if (star != std::string::npos) line = line.substr(0, star);

        std::istringstream words(line);
        std::string word;
        GcodeCommand cmd;
        cmd.source_line = lineno;
        cmd.comment = comment;
        bool first = true;
        while (words >> word) {
            char letter = (char)std::toupper((unsigned char)word[0]);
            std::string rest = word.substr(1);
            if (first && letter == 'N') continue;  // line number prefix
            if (first) {
                if (rest.empty())
                    throw Error("gcode: line " + std::to_string(lineno) +
                                ": bare command letter '" + word + "'");
                // Normalize e.g. "g01" -> "G1".
                try {
                    size_t pos = 0;
                    long num = std::stol(rest, &pos);
                    if (pos != rest.size()) throw std::invalid_argument(rest);
                    cmd.code = letter + std::to_string(num);
                } catch (const std::exception&) {
                    throw Error("gcode: line " + std::to_string(lineno) +
                                ": malformed command number '" + word + "'");
                }
                first = false;
            } else {
                double value = 0;
                if (!rest.empty()) {
                    try {
                        size_t pos = 0;
                        value = std::stod(rest, &pos);
                        if (pos != rest.size()) throw std::invalid_argument(rest);
                    } catch (const std::exception&) {
                        throw Error("gcode: line " + std::to_string(lineno) +
                                    ": malformed parameter '" + word + "'");
                    }
                }
                cmd.params[letter] = value;
            }
        }
        if (!first) program.commands.push_back(cmd);
    }
    return program;
}

GcodeProgram remove_redundant(const GcodeProgram& program, LayerPosition position) {
    bool keep_header = position == LayerPosition::first;
    bool keep_footer = position == LayerPosition::last;

    std::vector<bool> drop(program.commands.size(), false);
    std::vector<bool> drop_marker(program.markers.size(), false);

    if (program.has_markers()) {
        auto find = [&](MarkerKind kind) -> std::optional<size_t> {
            for (size_t i = 0; i < program.markers.size(); ++i)
                if (program.markers[i].kind == kind) return i;
            return std::nullopt;
        };
        auto hs = find(MarkerKind::header_start), he = find(MarkerKind::header_end);
        auto fs = find(MarkerKind::footer_start), fe = find(MarkerKind::footer_end);
        if (hs.has_value() != he.has_value() || fs.has_value() != fe.has_value())
            throw Error("remove_redundant: unbalanced section markers");
        if (!keep_header && hs) {
            for (size_t i = program.markers[*hs].pos; i < program.markers[*he].pos; ++i)
                drop[i] = true;
            drop_marker[*hs] = drop_marker[*he] = true;
        }
        if (!keep_footer && fs) {
            for (size_t i = program.markers[*fs].pos; i < program.markers[*fe].pos; ++i)
                drop[i] = true;
            drop_marker[*fs] = drop_marker[*fe] = true;
        }
    } else {
        if (!keep_header)
            for (size_t i = 0; i < program.commands.size() && is_header_class(program.commands[i]); ++i)
                drop[i] = true;
        if (!keep_footer)
            for (size_t i = program.commands.size();
                 i > 0 && is_footer_class(program.commands[i - 1]); --i)
                drop[i - 1] = true;
    }

    GcodeProgram out;
    std::vector<size_t> new_pos(program.commands.size() + 1, 0);
    for (size_t i = 0; i < program.commands.size(); ++i) {
        new_pos[i] = out.commands.size();
        if (!drop[i]) out.commands.push_back(program.commands[i]);
    }
    new_pos[program.commands.size()] = out.commands.size();
    for (size_t i = 0; i < program.markers.size(); ++i) {
        if (drop_marker[i]) continue;
        Marker m = program.markers[i];
        m.pos = new_pos[m.pos];
        out.markers.push_back(m);
    }
    return out;
}

std::string ValidationReport::summary() const {
    std::ostringstream out;
    out << (accepted() ? "accept" : "reject") << " violations=" << violations.size();
    for (const auto& v : violations)
        out << "\n  line " << v.source_line << ": " << v.rule << " (" << v.detail << ")";
    return out.str();
}

ValidationReport validate(const GcodeProgram& program, const MachineSpec& machine) {
    ValidationReport report;
    auto flag = [&](const GcodeCommand& c, const std::string& rule,
                    const std::string& detail) {
        report.violations.push_back({c.source_line, rule, detail});
    };
    double e_logical = 0;   // last commanded E in the current G92 frame
    double retraction_allowance = 0;
    for (const auto& c : program.commands) {
        if (c.code == "M997" || c.code == "M999" || c.code == "M23") {
            flag(c, "forbidden-command", c.code + " is never allowed");
            continue;
        }
        if (!machine.allowed_commands.count(c.code)) {
            flag(c, "forbidden-command", c.code + " is not in the machine allow-list");
            continue;
        }
        if (c.code == "M104" || c.code == "M109") {
            if (c.get('S') > machine.max_hotend_temp)
                flag(c, "hotend-limit",
                     "S" + std::to_string(c.get('S')) + " exceeds max " +
                         std::to_string(machine.max_hotend_temp));
        } else if (c.code == "M140" || c.code == "M190") {
            if (c.get('S') > machine.max_bed_temp)
                flag(c, "bed-limit",
                     "S" + std::to_string(c.get('S')) + " exceeds max " +
                         std::to_string(machine.max_bed_temp));
        } else if (c.code == "G0" || c.code == "G1") {
            if (c.has('X') && (c.get('X') < 0 || c.get('X') > machine.bed_x))
                flag(c, "out-of-bounds", "X" + std::to_string(c.get('X')));
            if (c.has('Y') && (c.get('Y') < 0 || c.get('Y') > machine.bed_y))
                flag(c, "out-of-bounds", "Y" + std::to_string(c.get('Y')));
            if (c.has('Z') && (c.get('Z') < 0 || c.get('Z') > machine.max_z))
                flag(c, "out-of-bounds", "Z" + std::to_string(c.get('Z')));
            if (c.has('E')) {
                if (c.get('E') < e_logical - retraction_allowance - 1e-9)
                    flag(c, "e-decreasing",
                         "E" + std::to_string(c.get('E')) + " after E" +
                             std::to_string(e_logical));
                e_logical = c.get('E');
            }
        } else if (c.code == "G92") {
            if (c.has('E')) e_logical = c.get('E');
        }
    }
    return report;
}

}  // namespace stls
