#include "stls/server.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "stls/gcode.hpp"
#include "stls/sectioner.hpp"
#include "stls/slicer.hpp"
#include "stls/stl_io.hpp"

namespace stls {

namespace fs = std::filesystem;

namespace {

struct SessionFail {
    Outcome outcome;
    std::string why;
};

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ';');
    return s;
}

// A fetched layer, fully prepared for printing.
struct Prepared {
    bool done = false;  // JOB_DONE received instead
    uint32_t index = 0;
    std::vector<uint8_t> stl_bytes;
    GcodeProgram program;
    std::string gcode_text;
};

void stream_program(const std::string& text, PrinterChannel& printer) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string reply = printer.send_line(line);
        if (reply.rfind("error", 0) == 0)
            throw SessionFail{Outcome::validation, "printer rejected '" + line + "': " + reply};
    }
}

}  // namespace

JobReport run_manufacturer_session(std::shared_ptr<ByteStream> raw,
                                   const MachineSpec& machine, PrinterChannel& printer,
                                   const ServerOptions& opts, StorageLedger* ledger_out) {
    JobReport report;
    report.role = "manufacturer";
    CountingStream stream(std::move(raw));
    StorageLedger ledger;
    std::deque<uint32_t> stored;  // indices with live artifacts

    auto layer_path = [&](uint32_t n, const char* ext) {
        return fs::path(opts.workdir) / ("layer_" + std::to_string(n) + ext);
    };
    auto store_artifacts = [&](const Prepared& p) {
        if (!opts.workdir.empty()) {
            fs::create_directories(opts.workdir);
            std::ofstream(layer_path(p.index, ".stl"), std::ios::binary)
                .write((const char*)p.stl_bytes.data(), (std::streamsize)p.stl_bytes.size());
            std::ofstream(layer_path(p.index, ".gcode")) << p.gcode_text;
        }
        ledger.store(ArtifactKind::stl, p.index);
        ledger.store(ArtifactKind::gcode, p.index);
        stored.push_back(p.index);
    };
    auto remove_artifacts = [&](uint32_t n) {
        if (!opts.workdir.empty()) {
            fs::remove(layer_path(n, ".stl"));
            fs::remove(layer_path(n, ".gcode"));
        }
        ledger.remove(ArtifactKind::stl, n);
        ledger.remove(ArtifactKind::gcode, n);
        stored.erase(std::find(stored.begin(), stored.end(), n));
    };
    auto abort_session = [&](Outcome outcome, const std::string& why) {
        try {
            send_message(stream, ProtocolMessage::text(MsgKind::abort, why));
        } catch (const Error&) {
        }
        while (!stored.empty()) remove_artifacts(stored.front());
        report.outcome = outcome;
        report.status = "aborted: " + why;
    };

    PrintConfig cfg;
    double h = 0;

    // Fetch layer n from the client and carry it through slice + strip +
    // validate. May run on the prefetch thread; touches only the transport.
    auto fetch_prepare = [&](uint32_t n) -> Prepared {
        ProtocolMessage req;
        req.kind = MsgKind::layer_request;
        req.layer_index = n;
        for (int attempt = 0;; ++attempt) {
            send_message(stream, req);
            ProtocolMessage msg;
            try {
                msg = recv_message(stream);
            } catch (const FrameError& e) {
                if (attempt == 0) continue;  // one re-request on corruption
                throw SessionFail{Outcome::transport,
                                  std::string("layer ") + std::to_string(n) +
                                      " failed twice: " + e.what()};
            }
            if (msg.kind == MsgKind::job_done) {
                Prepared p;
                p.done = true;
                return p;
            }
            if (msg.kind == MsgKind::abort || msg.kind == MsgKind::error)
                throw SessionFail{Outcome::protocol, "peer aborted: " + msg.payload_text()};
            if (msg.kind != MsgKind::layer_data || msg.layer_index != n)
                throw SessionFail{Outcome::protocol,
                                  "expected LAYER_DATA " + std::to_string(n)};

            Prepared p;
            p.index = n;
            p.stl_bytes = std::move(msg.payload);
            Mesh layer;
            try {
                layer = parse_stl(p.stl_bytes);
            } catch (const Error& e) {
                throw SessionFail{Outcome::geometry, std::string("layer ") +
                                                         std::to_string(n) +
                                                         " STL: " + e.what()};
            }
            SlabSplit split = split_slab_mesh(layer);
            Aabb box = bounding_box(layer);
            Slab slab;
            slab.index = n;
            slab.z_lo = box.min.z;
            slab.z_hi = box.max.z;
            slab.body = std::move(split.body);
            slab.guide = std::move(split.guide);
            PrintConfig layer_cfg = cfg;
            layer_cfg.z_offset = n * h;
            LayerPosition pos = n == 0 ? LayerPosition::first : LayerPosition::intermediate;
            GcodeProgram prog;
            try {
                prog = remove_redundant(slice_slab(slab, layer_cfg, machine, pos), pos);
            } catch (const Error& e) {
                throw SessionFail{Outcome::geometry, std::string("layer ") +
                                                         std::to_string(n) + ": " + e.what()};
            }
            ValidationReport vr = validate(prog, machine);
            if (!vr.accepted())
                throw SessionFail{Outcome::validation, "layer " + std::to_string(n) + ": " +
                                                           one_line(vr.summary())};
            p.gcode_text = prog.to_text();
            p.program = std::move(prog);
            return p;
        }
    };

    std::future<Prepared> prefetch;
    auto join_prefetch_quietly = [&] {
        if (prefetch.valid()) {
            try {
                prefetch.get();
            } catch (...) {
            }
        }
    };

    try {
        ProtocolMessage msg = recv_message(stream);
        if (msg.kind != MsgKind::spec_request)
            throw SessionFail{Outcome::protocol, "expected SPEC_REQUEST"};
        send_message(stream,
                     ProtocolMessage::text(MsgKind::spec_reply, machine.serialize_public()));

        msg = recv_message(stream);
        if (msg.kind != MsgKind::config)
            throw SessionFail{Outcome::protocol, "expected CONFIG"};
        try {
            cfg = PrintConfig::parse(msg.payload_text());
        } catch (const Error& e) {
            throw SessionFail{Outcome::protocol, e.what()};
        }
        h = cfg.layer_height;
        if (h < machine.layer_height_min - 1e-9 || h > machine.layer_height_max + 1e-9)
            throw SessionFail{Outcome::spec_incompatible,
                              "layer height outside machine range"};

        std::deque<Prepared> resident;
        uint32_t next_fetch = 0;
        bool job_done = false;

        // Warm-up: the first layer, plus the second when prefetching, so the
        // printer never starts a layer without the next one already local.
        {
            Prepared p = fetch_prepare(next_fetch);
            printer.advance_clock(opts.fetch_latency_sim);
            if (p.done) {
                job_done = true;
            } else {
                next_fetch++;
                store_artifacts(p);
                resident.push_back(std::move(p));
            }
            if (!job_done && opts.pipeline_depth >= 2) {
                Prepared p1 = fetch_prepare(next_fetch);
                printer.advance_clock(opts.fetch_latency_sim);
                if (p1.done) {
                    job_done = true;
                } else {
                    next_fetch++;
                    store_artifacts(p1);
                    resident.push_back(std::move(p1));
                }
            }
        }

        while (true) {
            if (resident.empty()) {
                if (job_done) break;
                Prepared p = fetch_prepare(next_fetch);
                printer.advance_clock(opts.fetch_latency_sim);
                if (p.done) {
                    job_done = true;
                    break;
                }
                next_fetch++;
                store_artifacts(p);
                resident.push_back(std::move(p));
            }
            Prepared cur = std::move(resident.front());
            resident.pop_front();

            // While this layer streams to the printer, fetch and slice the
            // next one on the side; the boundary idle is only the shortfall.
            if (opts.pipeline_depth >= 2 && !job_done && resident.empty()) {
                uint32_t idx = next_fetch;
                prefetch = std::async(std::launch::async,
                                      [&fetch_prepare, idx] { return fetch_prepare(idx); });
            }

            double t0 = printer.clock();
            stream_program(cur.gcode_text, printer);
            double span = printer.clock() - t0;
            report.layer_seconds.push_back(span);
            report.layers_printed++;

            if (prefetch.valid()) {
                Prepared p = prefetch.get();
                printer.advance_clock(std::max(0.0, opts.fetch_latency_sim - span));
                if (p.done) {
                    job_done = true;
                } else {
                    next_fetch++;
                    store_artifacts(p);
                    resident.push_back(std::move(p));
                }
            }
            remove_artifacts(cur.index);
        }

        if (report.layers_printed > 0)
            stream_program(standalone_footer(machine).to_text(), printer);
        report.layers_total = next_fetch;
        report.validation_summary =
            "accept layers=" + std::to_string(report.layers_printed);
        report.outcome = Outcome::done;
        report.status = "done";
    } catch (const SessionFail& f) {
        join_prefetch_quietly();
        abort_session(f.outcome, f.why);
    } catch (const TransportError& e) {
        join_prefetch_quietly();
        while (!stored.empty()) remove_artifacts(stored.front());
        report.outcome = Outcome::transport;
        report.status = std::string("transport failure: ") + e.what();
    } catch (const FrameError& e) {
        join_prefetch_quietly();
        abort_session(Outcome::transport, std::string("frame failure: ") + e.what());
    } catch (const Error& e) {
        join_prefetch_quietly();
        abort_session(Outcome::geometry, e.what());
    }

    if (auto* sim_channel = dynamic_cast<SimPrinterChannel*>(&printer)) {
        const PrinterSim& sim = sim_channel->sim();
        for (const auto& rec : sim.records())
            report.total_extruded_length += rec.extruded_length;
        DwellStats dwell = sim.dwell_report();
        std::ostringstream d;
        d << "blobs=" << dwell.total_blobs();
        report.dwell_summary = d.str();
    }
    report.ledger_digest = ledger.digest();
    report.bytes_sent = stream.bytes_sent();
    report.bytes_received = stream.bytes_received();
    if (ledger_out) *ledger_out = ledger;
    return report;
}

}  // namespace stls
