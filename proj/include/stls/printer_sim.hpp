#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stls/config.hpp"
#include "stls/contour.hpp"
#include "stls/framing.hpp"
#include "stls/geom.hpp"

namespace stls {

struct PrinterState {
    Vec3 position;            // physical, mm
    Vec3 logical_offset;      // physical = logical + offset (G92 rebinding)
    double e_logical = 0;     // commanded E in the current G92 frame
    double e_accum = 0;       // physical filament consumed, mm
    double hotend_temp = 25, bed_temp = 25;
    double hotend_setpoint = 0, bed_setpoint = 0;
    int fan = 0;
    bool homed = false;
    double feed = 1200;  // mm/min, modal
    double sim_clock = 0;  // seconds of simulated time
};

struct ExtrudedSegment {
    Vec2 start, end;
    double z;
    double e_delta;
};

struct LayerRecord {
    double z = 0;
    std::vector<ExtrudedSegment> segments;
    double extruded_length = 0;
    double e_total = 0;
    double t_start = 0, t_end = 0;  // sim seconds
};

struct BlobEvent {
    size_t layer;  // index into the layer records
    Vec3 position;
    double idle_seconds;
};

struct DwellStats {
    std::vector<double> max_idle_per_layer;
    std::vector<size_t> blob_count_per_layer;
    std::vector<BlobEvent> blobs;
    size_t total_blobs() const { return blobs.size(); }
};

// Virtual FFF printer on a line/ack serial discipline. Executes motion with
// constant-feed kinematics on a simulated clock, re-checks machine limits at
// runtime, and records extruded toolpaths per layer.
class PrinterSim {
public:
    explicit PrinterSim(const MachineSpec& machine, double dwell_threshold = 0.5);

    // One newline-terminated command in, exactly one ack out:
    // "ok" or "error:<detail>".
    std::string send_line(const std::string& line);

    // Simulated idle (the feeder is waiting on data); accrues dwell.
    void advance_clock(double dt_seconds);

    const PrinterState& state() const { return state_; }
    const std::vector<LayerRecord>& records() const { return records_; }
    size_t lines_received() const { return lines_received_; }
    size_t acks_sent() const { return acks_sent_; }

    DwellStats dwell_report() const;
    std::string record_report() const;  // line-delimited export for diffing

private:
    std::string execute(const struct GcodeCommand& cmd);
    void advance_time(double dt);  // active time: temps follow their lag
    LayerRecord& layer_for(double z);

    MachineSpec machine_;
    PrinterState state_;
    std::vector<LayerRecord> records_;
    std::vector<BlobEvent> blobs_;
    std::vector<double> idle_log_;  // parallel to blobs_? per-layer below
    struct Idle {
        size_t layer;
        double seconds;
    };
    std::vector<Idle> idles_;
    double dwell_threshold_;
    size_t lines_received_ = 0, acks_sent_ = 0;
};

// Serial-style channel to whatever executes G-code lines.
class PrinterChannel {
public:
    virtual ~PrinterChannel() = default;
    virtual std::string send_line(const std::string& line) = 0;
    virtual void advance_clock(double dt_seconds) = 0;
    virtual double clock() = 0;  // printer sim time, seconds
};

class SimPrinterChannel : public PrinterChannel {
public:
    explicit SimPrinterChannel(std::shared_ptr<PrinterSim> sim) : sim_(std::move(sim)) {}
    std::string send_line(const std::string& line) override { return sim_->send_line(line); }
    void advance_clock(double dt) override { sim_->advance_clock(dt); }
    double clock() override { return sim_->state().sim_clock; }
    PrinterSim& sim() { return *sim_; }

private:
    std::shared_ptr<PrinterSim> sim_;
};

// Line protocol over a byte stream ("pipe:" printers). Idle injection and
// clock queries are sent in-band as ";IDLE <seconds>" and ";CLOCK".
class StreamPrinterChannel : public PrinterChannel {
public:
    explicit StreamPrinterChannel(std::shared_ptr<ByteStream> stream)
        : stream_(std::move(stream)) {}
    std::string send_line(const std::string& line) override;
    void advance_clock(double dt) override;
    double clock() override;

private:
    std::string roundtrip(const std::string& line);
    std::shared_ptr<ByteStream> stream_;
};

// Serves a PrinterSim over a byte stream until the peer closes.
void serve_printer(PrinterSim& sim, ByteStream& stream);

}  // namespace stls
