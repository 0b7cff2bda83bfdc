#include "stls/printer_sim.hpp"

#include <cmath>
#include <sstream>

#include "stls/gcode.hpp"

namespace stls {

namespace {
constexpr double kTempTau = 10.0;      // first-order temperature lag, sim seconds
constexpr double kTempReached = 1.0;   // degrees considered "at temperature"
constexpr double kHotExtrusion = 180;  // hotend temp above which dwell makes blobs
constexpr size_t kMaxLine = 256;
}  // namespace

PrinterSim::PrinterSim(const MachineSpec& machine, double dwell_threshold)
    : machine_(machine), dwell_threshold_(dwell_threshold) {}

void PrinterSim::advance_time(double dt) {
    if (dt <= 0) return;
    double f = 1.0 - std::exp(-dt / kTempTau);
    state_.hotend_temp += (state_.hotend_setpoint - state_.hotend_temp) * f;
    state_.bed_temp += (state_.bed_setpoint - state_.bed_temp) * f;
    state_.sim_clock += dt;
}

void PrinterSim::advance_clock(double dt) {
    if (dt <= 0) return;
    bool hot = state_.hotend_temp >= kHotExtrusion;
    advance_time(dt);
    if (!hot) return;
    size_t layer = records_.empty() ? 0 : records_.size() - 1;
    idles_.push_back({layer, dt});
    if (dt > dwell_threshold_) blobs_.push_back({layer, state_.position, dt});
}

LayerRecord& PrinterSim::layer_for(double z) {
    if (records_.empty() || std::abs(records_.back().z - z) > 1e-9) {
        LayerRecord rec;
        rec.z = z;
        rec.t_start = state_.sim_clock;
        records_.push_back(rec);
    }
    return records_.back();
}

std::string PrinterSim::execute(const GcodeCommand& c) {
    if (c.code == "M23" || c.code == "M997" || c.code == "M999")
        return "error:forbidden " + c.code;

    if (c.code == "G0" || c.code == "G1") {
        if (!state_.homed) return "error:not homed";
        if (c.has('F')) {
            if (c.get('F') <= 0) return "error:bad feed";
            state_.feed = c.get('F');
        }
        Vec3 target = state_.position;
        if (c.has('X')) target.x = c.get('X') + state_.logical_offset.x;
        if (c.has('Y')) target.y = c.get('Y') + state_.logical_offset.y;
        if (c.has('Z')) target.z = c.get('Z') + state_.logical_offset.z;
        if (target.x < -1e-9 || target.x > machine_.bed_x + 1e-9 || target.y < -1e-9 ||
            target.y > machine_.bed_y + 1e-9 || target.z < -1e-9 ||
            target.z > machine_.max_z + 1e-9)
            return "error:move out of bounds";
        double e_delta = 0;
        if (c.has('E')) {
            e_delta = c.get('E') - state_.e_logical;
            state_.e_logical = c.get('E');
        }
        Vec3 d = target - state_.position;
        double dist = std::max(d.norm(), std::abs(e_delta));
        advance_time(dist / state_.feed * 60.0);
        if (e_delta > 0) {
            if (state_.hotend_temp < kHotExtrusion) return "error:cold extrusion";
            state_.e_accum += e_delta;
            double xy_len = std::sqrt(d.x * d.x + d.y * d.y);
            if (xy_len > 1e-9) {
                LayerRecord& rec = layer_for(target.z);
                rec.segments.push_back({{state_.position.x, state_.position.y},
                                        {target.x, target.y},
                                        target.z,
                                        e_delta});
                rec.extruded_length += xy_len;
                rec.e_total += e_delta;
                rec.t_end = state_.sim_clock;
            }
        }
        state_.position = target;
        return "ok";
    }
    if (c.code == "G12") {  // nozzle clean cycle
        advance_time(1.0);
        return "ok";
    }
    if (c.code == "G28") {
        state_.position = {0, 0, 0};
        state_.logical_offset = {0, 0, 0};
        state_.homed = true;
        advance_time(2.0);
        return "ok";
    }
    if (c.code == "G92") {
        if (c.has('X')) state_.logical_offset.x = state_.position.x - c.get('X');
        if (c.has('Y')) state_.logical_offset.y = state_.position.y - c.get('Y');
        if (c.has('Z')) state_.logical_offset.z = state_.position.z - c.get('Z');
        if (c.has('E')) state_.e_logical = c.get('E');
        return "ok";
    }
    if (c.code == "M104" || c.code == "M109") {
        double s = c.get('S');
        if (s > machine_.max_hotend_temp) return "error:hotend temp limit";
        state_.hotend_setpoint = s;
        if (c.code == "M109") {
            double gap = std::abs(state_.hotend_temp - s);
            if (gap > kTempReached) advance_time(kTempTau * std::log(gap / kTempReached));
            state_.hotend_temp = s;
        }
        return "ok";
    }
    if (c.code == "M140" || c.code == "M190") {
        double s = c.get('S');
        if (s > machine_.max_bed_temp) return "error:bed temp limit";
        state_.bed_setpoint = s;
        if (c.code == "M190") {
            double gap = std::abs(state_.bed_temp - s);
            if (gap > kTempReached) advance_time(kTempTau * std::log(gap / kTempReached));
            state_.bed_temp = s;
        }
        return "ok";
    }
    if (c.code == "M106") {
        int s = (int)c.get('S', 255);
        if (s < 0 || s > 255) return "error:bad fan speed";
        state_.fan = s;
        return "ok";
    }
    if (c.code == "M107") {
        state_.fan = 0;
        return "ok";
    }
    if (c.code == "M82") return "ok";   // absolute E is the only supported mode
    if (c.code == "M84") return "ok";   // motors idle
    return "error:unsupported " + c.code;
}

std::string PrinterSim::send_line(const std::string& raw) {
    lines_received_++;
    acks_sent_++;
    std::string line = raw;
    if (!line.empty() && line.back() == '\n') line.pop_back();
    if (line.size() > kMaxLine) return "error:line too long";
    GcodeProgram parsed;
    try {
        parsed = parse_gcode(line);
    } catch (const Error& e) {
        return std::string("error:") + e.what();
    }
    if (parsed.commands.empty()) return "ok";  // comment or blank line
    return execute(parsed.commands.front());
}

DwellStats PrinterSim::dwell_report() const {
    DwellStats stats;
    size_t n = std::max<size_t>(records_.size(), 1);
    stats.max_idle_per_layer.assign(n, 0.0);
    stats.blob_count_per_layer.assign(n, 0);
    for (const auto& idle : idles_) {
        size_t l = std::min(idle.layer, n - 1);
        stats.max_idle_per_layer[l] = std::max(stats.max_idle_per_layer[l], idle.seconds);
    }
    for (const auto& b : blobs_) {
        size_t l = std::min(b.layer, n - 1);
        stats.blob_count_per_layer[l]++;
    }
    stats.blobs = blobs_;
    return stats;
}

std::string PrinterSim::record_report() const {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    for (size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        out << "layer " << i << " z=" << r.z << " segments=" << r.segments.size()
            << " length=" << r.extruded_length << " e=" << r.e_total
            << " span=" << (r.t_end - r.t_start) << "\n";
    }
    out << "total e_accum=" << state_.e_accum << " sim_time=" << state_.sim_clock << "\n";
    return out.str();
}

std::string StreamPrinterChannel::roundtrip(const std::string& line) {
    std::string msg = line;
    if (msg.empty() || msg.back() != '\n') msg += '\n';
    stream_->send((const uint8_t*)msg.data(), msg.size());
    std::string reply;
    char ch;
    while (true) {
        stream_->recv_exact((uint8_t*)&ch, 1);
        if (ch == '\n') break;
        reply += ch;
    }
    return reply;
}

std::string StreamPrinterChannel::send_line(const std::string& line) {
    return roundtrip(line);
}

void StreamPrinterChannel::advance_clock(double dt) {
    if (dt > 0) roundtrip(";IDLE " + std::to_string(dt));
}

double StreamPrinterChannel::clock() {
    std::string reply = roundtrip(";CLOCK");
    if (reply.rfind("ok ", 0) != 0)
        throw Error("printer: bad clock reply '" + reply + "'");
    return std::stod(reply.substr(3));
}

void serve_printer(PrinterSim& sim, ByteStream& stream) {
    std::string line;
    char ch;
    while (true) {
        try {
            stream.recv_exact((uint8_t*)&ch, 1);
        } catch (const Error&) {
            return;  // peer closed
        }
        if (ch != '\n') {
            line += ch;
            continue;
        }
        std::string reply;
        if (line.rfind(";IDLE ", 0) == 0) {
            sim.advance_clock(std::stod(line.substr(6)));
            reply = "ok";
        } else if (line == ";CLOCK") {
            reply = "ok " + std::to_string(sim.state().sim_clock);
        } else {
            reply = sim.send_line(line);
        }
        reply += '\n';
        stream.send((const uint8_t*)reply.data(), reply.size());
        line.clear();
    }
}

}  // namespace stls
