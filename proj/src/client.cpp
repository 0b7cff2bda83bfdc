#include "stls/client.hpp"

#include <chrono>
#include <cmath>

#include "stls/stl_io.hpp"

namespace stls {

namespace {

const char* kind_name(MsgKind k) {
    switch (k) {
        case MsgKind::spec_request: return "SPEC_REQUEST";
        case MsgKind::spec_reply: return "SPEC_REPLY";
        case MsgKind::config: return "CONFIG";
        case MsgKind::layer_request: return "LAYER_REQUEST";
        case MsgKind::layer_data: return "LAYER_DATA";
        case MsgKind::job_done: return "JOB_DONE";
        case MsgKind::abort: return "ABORT";
        case MsgKind::error: return "ERROR";
    }
    return "?";
}

double now_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace

JobReport run_client(const Mesh& mesh, const PrintConfig& config,
                     std::shared_ptr<ByteStream> raw, const ClientOptions& opts) {
    JobReport report;
    report.role = "client";
    CountingStream stream(std::move(raw));

    auto abort_session = [&](Outcome outcome, const std::string& why) {
        try {
            send_message(stream, ProtocolMessage::text(MsgKind::abort, why));
        } catch (const Error&) {
        }
        report.outcome = outcome;
        report.status = "aborted: " + why;
    };

    try {
        config.validate();

        send_message(stream, {MsgKind::spec_request});
        ProtocolMessage reply = recv_message(stream);
        if (reply.kind == MsgKind::abort || reply.kind == MsgKind::error) {
            report.outcome = Outcome::protocol;
            report.status = "peer aborted: " + reply.payload_text();
        } else if (reply.kind != MsgKind::spec_reply) {
            abort_session(Outcome::protocol,
                          std::string("expected SPEC_REPLY, got ") + kind_name(reply.kind));
        } else {
            MachineSpec spec = MachineSpec::parse(reply.payload_text());
            if (config.layer_height < spec.layer_height_min - 1e-9 ||
                config.layer_height > spec.layer_height_max + 1e-9) {
                abort_session(Outcome::spec_incompatible,
                              "layer height " + std::to_string(config.layer_height) +
                                  " outside machine range [" +
                                  std::to_string(spec.layer_height_min) + ", " +
                                  std::to_string(spec.layer_height_max) + "]");
            } else {
                // Local pipeline: orient, drop, center on the bed, supports,
                // section, guidelines. The manufacturer never sees more than
                // the per-layer files produced here.
                Mesh part = drop_to_bed(apply_transform(mesh, opts.orientation));
                Aabb box = bounding_box(part);
                RigidTransform center;
                center.translation = {spec.bed_x / 2 - (box.min.x + box.max.x) / 2,
                                      spec.bed_y / 2 - (box.min.y + box.max.y) / 2, 0};
                part = apply_transform(part, center);
                if (opts.supports) part = generate_supports(part, opts.support_spec);
                auto slabs = section_mesh(part, config.layer_height,
                                          spec.layer_height_min, spec.layer_height_max);
                Aabb job = bounding_box(part);
                for (auto& slab : slabs)
                    slab = add_guideline(std::move(slab), opts.guide_spec, job);
                report.layers_total = (uint32_t)slabs.size();

                std::vector<std::vector<uint8_t>> payloads(slabs.size());
                for (size_t i = 0; i < slabs.size(); ++i) {
                    Mesh layer = slabs[i].body;
                    layer.triangles.insert(layer.triangles.end(),
                                           slabs[i].guide.triangles.begin(),
                                           slabs[i].guide.triangles.end());
                    payloads[i] = write_stl(layer);
                }

                send_message(stream,
                             ProtocolMessage::text(MsgKind::config, config.serialize()));

                uint32_t next = 0;
                int64_t last_served = -1;
                bool resent = false;
                while (true) {
                    ProtocolMessage msg = recv_message(stream);
                    if (msg.kind == MsgKind::abort || msg.kind == MsgKind::error) {
                        report.outcome = Outcome::protocol;
                        report.status = "peer aborted: " + msg.payload_text();
                        break;
                    }
                    if (msg.kind != MsgKind::layer_request) {
                        abort_session(Outcome::protocol,
                                      std::string("expected LAYER_REQUEST, got ") +
                                          kind_name(msg.kind));
                        break;
                    }
                    uint32_t n = msg.layer_index;
                    if (n == slabs.size() && next == slabs.size()) {
                        send_message(stream, {MsgKind::job_done});
                        report.outcome = Outcome::done;
                        report.status = "done";
                        break;
                    }
                    double t0 = now_seconds();
                    if (n == next) {
                        ProtocolMessage data;
                        data.kind = MsgKind::layer_data;
                        data.layer_index = n;
                        data.payload = payloads[n];
                        send_message(stream, data);
                        last_served = n;
                        resent = false;
                        next++;
                        report.layers_printed = next;
                        report.layer_seconds.push_back(now_seconds() - t0);
                    } else if ((int64_t)n == last_served && !resent) {
                        // One repeat is allowed: the peer re-requests after a
                        // corrupt frame.
                        ProtocolMessage data;
                        data.kind = MsgKind::layer_data;
                        data.layer_index = n;
                        data.payload = payloads[n];
                        send_message(stream, data);
                        resent = true;
                    } else {
                        abort_session(Outcome::protocol,
                                      "out-of-order layer request " + std::to_string(n) +
                                          " (expected " + std::to_string(next) + ")");
                        break;
                    }
                }
            }
        }
    } catch (const TransportError& e) {
        report.outcome = Outcome::transport;
        report.status = std::string("transport failure: ") + e.what();
    } catch (const FrameError& e) {
        report.outcome = Outcome::transport;
        report.status = std::string("frame failure: ") + e.what();
    } catch (const Error& e) {
        abort_session(Outcome::geometry, e.what());
    }

    report.bytes_sent = stream.bytes_sent();
    report.bytes_received = stream.bytes_received();
    return report;
}

}  // namespace stls
