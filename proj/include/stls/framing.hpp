#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stls/geom.hpp"

namespace stls {

enum class MsgKind : uint8_t {
    spec_request = 0,
    spec_reply = 1,
    config = 2,
    layer_request = 3,
    layer_data = 4,
    job_done = 5,
    abort = 6,
    error = 7,
};

constexpr size_t kMaxPayload = 64u * 1024 * 1024;

struct ProtocolMessage {
    MsgKind kind = MsgKind::spec_request;
    uint32_t layer_index = 0;  // LAYER_REQUEST / LAYER_DATA only
    std::vector<uint8_t> payload;

    bool operator==(const ProtocolMessage&) const = default;

    std::string payload_text() const { return std::string(payload.begin(), payload.end()); }
    static ProtocolMessage text(MsgKind kind, const std::string& body, uint32_t layer = 0) {
        ProtocolMessage m;
        m.kind = kind;
        m.layer_index = layer;
        m.payload.assign(body.begin(), body.end());
        return m;
    }
};

struct FrameError : Error {
    explicit FrameError(const std::string& what) : Error(what) {}
};

struct TransportError : Error {
    explicit TransportError(const std::string& what) : Error(what) {}
};

// Wire frame: "STLS" | version u8=1 | kind u8 | layer_index u32le |
// payload_len u32le | payload | crc32(payload) u32le.
std::vector<uint8_t> frame_message(const ProtocolMessage& msg);
ProtocolMessage parse_frame(const std::vector<uint8_t>& bytes);

// Ordered reliable byte stream; the secure channel is assumed to wrap this.
class ByteStream {
public:
    virtual ~ByteStream() = default;
    virtual void send(const uint8_t* data, size_t len) = 0;
    // Reads exactly len bytes; throws on close/timeout.
    virtual void recv_exact(uint8_t* data, size_t len) = 0;
    virtual void close() = 0;
};

void send_message(ByteStream& stream, const ProtocolMessage& msg);
ProtocolMessage recv_message(ByteStream& stream);

// Pass-through wrapper that tallies traffic for job reports.
class CountingStream : public ByteStream {
public:
    explicit CountingStream(std::shared_ptr<ByteStream> inner) : inner_(std::move(inner)) {}
    void send(const uint8_t* data, size_t len) override {
        inner_->send(data, len);
        sent_ += len;
    }
    void recv_exact(uint8_t* data, size_t len) override {
        inner_->recv_exact(data, len);
        received_ += len;
    }
    void close() override { inner_->close(); }
    uint64_t bytes_sent() const { return sent_; }
    uint64_t bytes_received() const { return received_; }

private:
    std::shared_ptr<ByteStream> inner_;
    uint64_t sent_ = 0, received_ = 0;
};

// In-process pipe endpoint pair for tests and loopback runs.
struct DuplexPipe {
    std::shared_ptr<ByteStream> a, b;
};
DuplexPipe make_pipe();

// TCP client / single-shot server (one connection at a time).
std::shared_ptr<ByteStream> tcp_connect(const std::string& host, int port);
class TcpListener {
public:
    TcpListener(const std::string& host, int port);
    ~TcpListener();
    std::shared_ptr<ByteStream> accept();
    int port() const { return port_; }

private:
    int fd_ = -1;
    int port_ = 0;
};

}  // namespace stls
