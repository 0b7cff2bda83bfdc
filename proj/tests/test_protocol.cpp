#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <functional>
#include <thread>

#include "stls/client.hpp"
#include "stls/server.hpp"
#include "stls/stl_io.hpp"
#include "testutil.hpp"

using namespace stls;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

Mesh flat_box() { return stls::make_box({0, 0, 0}, {10, 10, 3.0}); }  // 10 layers at 0.3

PrintConfig base_config() {
    PrintConfig c;
    c.layer_height = 0.3;
    return c;
}

ClientOptions no_support_opts() {
    ClientOptions o;
    o.supports = false;
    return o;
}

struct LoopbackRun {
    JobReport client, server;
    StorageLedger ledger;
    std::shared_ptr<PrinterSim> sim;
};

LoopbackRun run_loopback(const Mesh& mesh, const ServerOptions& server_opts,
                         const PrintConfig& config = base_config()) {
    LoopbackRun out;
    DuplexPipe pipe = make_pipe();
    MachineSpec machine;
    out.sim = std::make_shared<PrinterSim>(machine);
    SimPrinterChannel channel(out.sim);
    std::thread client_thread([&] {
        out.client = run_client(mesh, config, pipe.a, no_support_opts());
    });
    out.server =
        run_manufacturer_session(pipe.b, machine, channel, server_opts, &out.ledger);
    client_thread.join();
    return out;
}

}  // namespace

TEST_CASE("loopback job: 10 layers, both sides agree, ledger audits clean") {
    ServerOptions opts;
    LoopbackRun run = run_loopback(flat_box(), opts);
    CHECK(run.client.ok());
    CHECK(run.server.ok());
    CHECK(run.client.layers_total == 10);
    CHECK(run.client.layers_printed == 10);
    CHECK(run.server.layers_printed == 10);
    CHECK(run.server.layers_total == 10);
    CHECK_NOTHROW(run.ledger.audit());
    CHECK(run.ledger.max_resident() == 2);
    // Printer saw 10 distinct layers at increasing Z.
    REQUIRE(run.sim->records().size() == 10);
    for (size_t i = 0; i < 10; ++i)
        CHECK(run.sim->records()[i].z == doctest::Approx((i + 1) * 0.3));
}

TEST_CASE("loopback with workdir: artifacts gone after the job") {
    fs::path dir = fs::temp_directory_path() / "stls_proto_workdir";
    fs::remove_all(dir);
    ServerOptions opts;
    opts.workdir = dir.string();
    LoopbackRun run = run_loopback(flat_box(), opts);
    CHECK(run.server.ok());
    size_t leftovers = 0;
    if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir)) (void)e, leftovers++;
    CHECK(leftovers == 0);
    fs::remove_all(dir);
}

TEST_CASE("pipeline depth 1 also completes") {
    ServerOptions opts;
    opts.pipeline_depth = 1;
    LoopbackRun run = run_loopback(flat_box(), opts);
    CHECK(run.client.ok());
    CHECK(run.server.ok());
    CHECK_NOTHROW(run.ledger.audit());
}

TEST_CASE("spec-incompatible layer height aborts before geometry is sent") {
    DuplexPipe pipe = make_pipe();
    MachineSpec machine;
    auto sim = std::make_shared<PrinterSim>(machine);
    SimPrinterChannel channel(sim);
    PrintConfig config;
    config.layer_height = 0.05;  // below machine minimum 0.1
    JobReport client_report;
    std::thread client_thread([&] {
        client_report = run_client(flat_box(), config, pipe.a, no_support_opts());
    });
    JobReport server_report =
        run_manufacturer_session(pipe.b, machine, channel, ServerOptions{});
    client_thread.join();
    CHECK(client_report.outcome == Outcome::spec_incompatible);
    CHECK(client_report.exit_code() == 2);
    CHECK(client_report.layers_printed == 0);
    CHECK_FALSE(server_report.ok());
}

// ---- scripted adversarial manufacturer against the client ----

namespace {

JobReport client_against(const std::function<void(ByteStream&)>& script) {
    DuplexPipe pipe = make_pipe();
    JobReport report;
    std::thread client_thread([&] {
        report = run_client(flat_box(), base_config(), pipe.a, no_support_opts());
    });
    try {
        script(*pipe.b);
    } catch (const Error&) {
    }
    pipe.b->close();
    client_thread.join();
    return report;
}

void do_handshake_as_manufacturer(ByteStream& s) {
    ProtocolMessage m = recv_message(s);
    REQUIRE(m.kind == MsgKind::spec_request);
    send_message(s, ProtocolMessage::text(MsgKind::spec_reply,
                                          MachineSpec{}.serialize_public()));
    m = recv_message(s);
    REQUIRE(m.kind == MsgKind::config);
}

ProtocolMessage layer_request(uint32_t n) {
    ProtocolMessage m;
    m.kind = MsgKind::layer_request;
    m.layer_index = n;
    return m;
}

}  // namespace

TEST_CASE("client aborts on out-of-order layer request") {
    JobReport report = client_against([](ByteStream& s) {
        do_handshake_as_manufacturer(s);
        send_message(s, layer_request(0));
        REQUIRE(recv_message(s).kind == MsgKind::layer_data);
        send_message(s, layer_request(5));  // skip
        ProtocolMessage m = recv_message(s);
        CHECK(m.kind == MsgKind::abort);
    });
    CHECK(report.outcome == Outcome::protocol);
    CHECK(report.layers_printed == 1);
}

TEST_CASE("client serves a single repeat of the last layer, then aborts") {
    JobReport report = client_against([](ByteStream& s) {
        do_handshake_as_manufacturer(s);
        send_message(s, layer_request(0));
        REQUIRE(recv_message(s).kind == MsgKind::layer_data);
        send_message(s, layer_request(0));  // simulated crc re-request
        ProtocolMessage again = recv_message(s);
        CHECK(again.kind == MsgKind::layer_data);
        CHECK(again.layer_index == 0);
        send_message(s, layer_request(0));  // second repeat is a violation
        CHECK(recv_message(s).kind == MsgKind::abort);
    });
    CHECK(report.outcome == Outcome::protocol);
}

TEST_CASE("client rejects a non-reply to SPEC_REQUEST") {
    JobReport report = client_against([](ByteStream& s) {
        ProtocolMessage m = recv_message(s);
        REQUIRE(m.kind == MsgKind::spec_request);
        send_message(s, layer_request(0));  // nonsense
        CHECK(recv_message(s).kind == MsgKind::abort);
    });
    CHECK(report.outcome == Outcome::protocol);
    CHECK(report.exit_code() == 3);
}

TEST_CASE("client reports transport loss with partial layer count") {
    JobReport report = client_against([](ByteStream& s) {
        do_handshake_as_manufacturer(s);
        send_message(s, layer_request(0));
        REQUIRE(recv_message(s).kind == MsgKind::layer_data);
        send_message(s, layer_request(1));
        REQUIRE(recv_message(s).kind == MsgKind::layer_data);
        // hang up mid-job (script returns; pipe closes)
    });
    CHECK(report.outcome == Outcome::transport);
    CHECK(report.layers_printed == 2);
    CHECK(report.layers_total == 10);
}

TEST_CASE("client never sends ahead: exactly one LAYER_DATA per request") {
    JobReport report = client_against([](ByteStream& s) {
        do_handshake_as_manufacturer(s);
        for (uint32_t n = 0; n < 10; ++n) {
            send_message(s, layer_request(n));
            ProtocolMessage m = recv_message(s);
            REQUIRE(m.kind == MsgKind::layer_data);
            REQUIRE(m.layer_index == n);
            REQUIRE(parse_stl(m.payload).size() > 0);
        }
        send_message(s, layer_request(10));
        CHECK(recv_message(s).kind == MsgKind::job_done);
    });
    CHECK(report.ok());
    CHECK(report.layers_printed == 10);
}

// ---- scripted adversarial client against the manufacturer ----

namespace {

JobReport server_against(const std::function<void(ByteStream&)>& script,
                         StorageLedger* ledger = nullptr,
                         const std::string& workdir = "") {
    DuplexPipe pipe = make_pipe();
    MachineSpec machine;
    auto sim = std::make_shared<PrinterSim>(machine);
    SimPrinterChannel channel(sim);
    ServerOptions opts;
    opts.workdir = workdir;
    JobReport report;
    std::thread server_thread([&] {
        report = run_manufacturer_session(pipe.b, machine, channel, opts, ledger);
    });
    try {
        script(*pipe.a);
    } catch (const Error&) {
    }
    pipe.a->close();
    server_thread.join();
    return report;
}

void do_handshake_as_client(ByteStream& s) {
    send_message(s, {MsgKind::spec_request});
    ProtocolMessage m = recv_message(s);
    REQUIRE(m.kind == MsgKind::spec_reply);
    send_message(s, ProtocolMessage::text(MsgKind::config, base_config().serialize()));
}

std::vector<std::vector<uint8_t>> slab_payloads(const Mesh& mesh) {
    auto slabs = section_mesh(mesh, 0.3);
    Aabb job = bounding_box(mesh);
    std::vector<std::vector<uint8_t>> payloads;
    for (auto& s : slabs) {
        s = add_guideline(std::move(s), GuideSpec{}, job);
        Mesh combined = s.body;
        combined.triangles.insert(combined.triangles.end(), s.guide.triangles.begin(),
                                  s.guide.triangles.end());
        payloads.push_back(write_stl(combined));
    }
    return payloads;
}

Mesh centered_flat_box() {
    Mesh m = flat_box();
    RigidTransform t;
    t.translation = {105, 105, 0};
    return apply_transform(m, t);
}

}  // namespace

TEST_CASE("server aborts on unsolicited LAYER_DATA") {
    StorageLedger ledger;
    JobReport report = server_against(
        [](ByteStream& s) {
            send_message(s, ProtocolMessage::text(MsgKind::layer_data, "junk", 0));
            CHECK(recv_message(s).kind == MsgKind::abort);
        },
        &ledger);
    CHECK(report.outcome == Outcome::protocol);
    CHECK(ledger.events().empty());  // nothing was ever stored
}

TEST_CASE("server aborts on duplicate SPEC_REQUEST") {
    JobReport report = server_against([](ByteStream& s) {
        send_message(s, {MsgKind::spec_request});
        REQUIRE(recv_message(s).kind == MsgKind::spec_reply);
        send_message(s, {MsgKind::spec_request});  // CONFIG expected
        CHECK(recv_message(s).kind == MsgKind::abort);
    });
    CHECK(report.outcome == Outcome::protocol);
}

TEST_CASE("server rejects machine-choice keys in CONFIG") {
    JobReport report = server_against([](ByteStream& s) {
        send_message(s, {MsgKind::spec_request});
        REQUIRE(recv_message(s).kind == MsgKind::spec_reply);
        send_message(s, ProtocolMessage::text(MsgKind::config,
                                              "layer_height=0.3\nprint_feed=9000\n"));
        ProtocolMessage m = recv_message(s);
        CHECK(m.kind == MsgKind::abort);
        CHECK(m.payload_text().find("machine-choice") != std::string::npos);
    });
    CHECK(report.outcome == Outcome::protocol);
}

TEST_CASE("server aborts on wrong-index LAYER_DATA") {
    JobReport report = server_against([](ByteStream& s) {
        do_handshake_as_client(s);
        ProtocolMessage req = recv_message(s);
        REQUIRE(req.kind == MsgKind::layer_request);
        REQUIRE(req.layer_index == 0);
        ProtocolMessage wrong;
        wrong.kind = MsgKind::layer_data;
        wrong.layer_index = 7;
        send_message(s, wrong);
        CHECK(recv_message(s).kind == MsgKind::abort);
    });
    CHECK(report.outcome == Outcome::protocol);
}

TEST_CASE("server re-requests once after a corrupt frame, then proceeds") {
    auto payloads = slab_payloads(centered_flat_box());
    JobReport report = server_against([&](ByteStream& s) {
        do_handshake_as_client(s);
        ProtocolMessage req = recv_message(s);
        REQUIRE(req.layer_index == 0);
        // corrupt the first copy
        ProtocolMessage data;
        data.kind = MsgKind::layer_data;
        data.layer_index = 0;
        data.payload = payloads[0];
        auto bytes = frame_message(data);
        bytes[20] ^= 0xff;
        s.send(bytes.data(), bytes.size());
        ProtocolMessage retry = recv_message(s);
        CHECK(retry.kind == MsgKind::layer_request);
        CHECK(retry.layer_index == 0);
        send_message(s, data);  // clean copy
        // keep serving until JOB_DONE closes the session
        while (true) {
            ProtocolMessage next = recv_message(s);
            REQUIRE(next.kind == MsgKind::layer_request);
            if (next.layer_index >= payloads.size()) {
                send_message(s, {MsgKind::job_done});
                break;
            }
            ProtocolMessage d;
            d.kind = MsgKind::layer_data;
            d.layer_index = next.layer_index;
            d.payload = payloads[next.layer_index];
            send_message(s, d);
        }
    });
    CHECK(report.ok());
    CHECK(report.layers_printed == 10);
}

TEST_CASE("server aborts after two corrupt frames for the same layer") {
    JobReport report = server_against([](ByteStream& s) {
        do_handshake_as_client(s);
        for (int i = 0; i < 2; ++i) {
            ProtocolMessage req = recv_message(s);
            REQUIRE(req.kind == MsgKind::layer_request);
            ProtocolMessage data = ProtocolMessage::text(MsgKind::layer_data, "payload", 0);
            auto bytes = frame_message(data);
            bytes.back() ^= 0xff;  // crc corrupted
            s.send(bytes.data(), bytes.size());
        }
        CHECK(recv_message(s).kind == MsgKind::abort);
    });
    CHECK(report.outcome == Outcome::transport);
}

TEST_CASE("server aborts on malformed layer STL with no artifact leakage") {
    fs::path dir = fs::temp_directory_path() / "stls_proto_badstl";
    fs::remove_all(dir);
    StorageLedger ledger;
    JobReport report = server_against(
        [](ByteStream& s) {
            do_handshake_as_client(s);
            ProtocolMessage req = recv_message(s);
            REQUIRE(req.kind == MsgKind::layer_request);
            send_message(s, ProtocolMessage::text(MsgKind::layer_data, "not an stl", 0));
            CHECK(recv_message(s).kind == MsgKind::abort);
        },
        &ledger, dir.string());
    CHECK(report.outcome == Outcome::geometry);
    size_t leftovers = 0;
    if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir)) (void)e, leftovers++;
    CHECK(leftovers == 0);
    fs::remove_all(dir);
}

TEST_CASE("server aborts when a layer slices off the bed") {
    JobReport report = server_against([](ByteStream& s) {
        do_handshake_as_client(s);
        ProtocolMessage req = recv_message(s);
        REQUIRE(req.kind == MsgKind::layer_request);
        // Layer hanging past x=220: slicing fails the bounds re-check.
        Mesh far = stls::make_box({200, 100, 0}, {230, 120, 0.3});
        ProtocolMessage data;
        data.kind = MsgKind::layer_data;
        data.layer_index = 0;
        data.payload = write_stl(far);
        send_message(s, data);
        CHECK(recv_message(s).kind == MsgKind::abort);
    });
    CHECK(report.outcome == Outcome::geometry);
    CHECK(report.exit_code() == 4);
}
