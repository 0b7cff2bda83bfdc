#include "stls/framing.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>
#include <zlib.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

namespace stls {

namespace {

constexpr uint8_t kMagic[4] = {'S', 'T', 'L', 'S'};
constexpr uint8_t kVersion = 1;

void push_u32le(std::vector<uint8_t>& out, uint32_t u) {
    out.push_back((uint8_t)(u & 0xff));
    out.push_back((uint8_t)((u >> 8) & 0xff));
    out.push_back((uint8_t)((u >> 16) & 0xff));
    out.push_back((uint8_t)((u >> 24) & 0xff));
}

uint32_t read_u32le(const uint8_t* p) {
    return (uint32_t)p[0] | ((uint32_t)p[1] << 8) | ((uint32_t)p[2] << 16) |
           ((uint32_t)p[3] << 24);
}

uint32_t payload_crc(const std::vector<uint8_t>& payload) {
    return (uint32_t)crc32(0, payload.empty() ? Z_NULL : payload.data(),
                           (uInt)payload.size());
}

}  // namespace

std::vector<uint8_t> frame_message(const ProtocolMessage& msg) {
    if (msg.payload.size() > kMaxPayload) throw FrameError("frame: payload too large");
    std::vector<uint8_t> out;
    out.reserve(18 + msg.payload.size());
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kVersion);
    out.push_back((uint8_t)msg.kind);
    push_u32le(out, msg.layer_index);
    push_u32le(out, (uint32_t)msg.payload.size());
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
    push_u32le(out, payload_crc(msg.payload));
    return out;
}

ProtocolMessage parse_frame(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 18) throw FrameError("frame: truncated header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FrameError("frame: bad magic");
    if (bytes[4] != kVersion)
        throw FrameError("frame: unknown version " + std::to_string(bytes[4]));
    uint8_t kind = bytes[5];
    if (kind > (uint8_t)MsgKind::error)
        throw FrameError("frame: unknown kind " + std::to_string(kind));
    uint32_t layer = read_u32le(bytes.data() + 6);
    uint32_t len = read_u32le(bytes.data() + 10);
    if (len > kMaxPayload) throw FrameError("frame: oversized payload");
    if (bytes.size() != 18 + (size_t)len) throw FrameError("frame: length mismatch");
    ProtocolMessage msg;
    msg.kind = (MsgKind)kind;
    msg.layer_index = layer;
    msg.payload.assign(bytes.begin() + 14, bytes.begin() + 14 + len);
    uint32_t crc = read_u32le(bytes.data() + 14 + len);
    if (crc != payload_crc(msg.payload)) throw FrameError("frame: crc mismatch");
    return msg;
}

void send_message(ByteStream& stream, const ProtocolMessage& msg) {
    auto bytes = frame_message(msg);
    stream.send(bytes.data(), bytes.size());
}

ProtocolMessage recv_message(ByteStream& stream) {
    std::vector<uint8_t> head(14);
    stream.recv_exact(head.data(), head.size());
    if (std::memcmp(head.data(), kMagic, 4) != 0) throw FrameError("frame: bad magic");
    uint32_t len = read_u32le(head.data() + 10);
    if (len > kMaxPayload) throw FrameError("frame: oversized payload");
    std::vector<uint8_t> rest(len + 4);
    stream.recv_exact(rest.data(), rest.size());
    std::vector<uint8_t> whole = head;
    whole.insert(whole.end(), rest.begin(), rest.end());
    return parse_frame(whole);
}

namespace {

// One direction of an in-process pipe.
struct ByteQueue {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<uint8_t> data;
    bool closed = false;

    void write(const uint8_t* p, size_t n) {
        std::lock_guard lock(mu);
        if (closed) throw TransportError("pipe: closed");
        data.insert(data.end(), p, p + n);
        cv.notify_all();
    }
    void read(uint8_t* p, size_t n) {
        std::unique_lock lock(mu);
        for (size_t got = 0; got < n;) {
            cv.wait(lock, [&] { return !data.empty() || closed; });
            if (data.empty() && closed) throw TransportError("pipe: closed by peer");
            while (got < n && !data.empty()) {
                p[got++] = data.front();
                data.pop_front();
            }
        }
    }
    void close() {
        std::lock_guard lock(mu);
        closed = true;
        cv.notify_all();
    }
};

class PipeEnd : public ByteStream {
public:
    PipeEnd(std::shared_ptr<ByteQueue> out, std::shared_ptr<ByteQueue> in)
        : out_(std::move(out)), in_(std::move(in)) {}
    void send(const uint8_t* data, size_t len) override { out_->write(data, len); }
    void recv_exact(uint8_t* data, size_t len) override { in_->read(data, len); }
    void close() override {
        out_->close();
        in_->close();
    }

private:
    std::shared_ptr<ByteQueue> out_, in_;
};

class SocketStream : public ByteStream {
public:
    explicit SocketStream(int fd) : fd_(fd) {}
    ~SocketStream() override { close(); }
    void send(const uint8_t* data, size_t len) override {
        while (len > 0) {
            ssize_t n = ::send(fd_, data, len, MSG_NOSIGNAL);
            if (n <= 0) throw TransportError("socket: send failed");
            data += n;
            len -= (size_t)n;
        }
    }
    void recv_exact(uint8_t* data, size_t len) override {
        while (len > 0) {
            ssize_t n = ::recv(fd_, data, len, 0);
            if (n <= 0) throw TransportError("socket: connection closed");
            data += n;
            len -= (size_t)n;
        }
    }
    void close() override {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_;
};

}  // namespace

DuplexPipe make_pipe() {
    auto q1 = std::make_shared<ByteQueue>();
    auto q2 = std::make_shared<ByteQueue>();
    return {std::make_shared<PipeEnd>(q1, q2), std::make_shared<PipeEnd>(q2, q1)};
}

std::shared_ptr<ByteStream> tcp_connect(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
        throw TransportError("tcp: cannot resolve " + host);
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    freeaddrinfo(res);
    if (fd < 0) throw TransportError("tcp: cannot connect to " + host + ":" + std::to_string(port));
    return std::make_shared<SocketStream>(fd);
}

TcpListener::TcpListener(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError("tcp: cannot create socket");
    int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons((uint16_t)port);
    if (host.empty() || host == "0.0.0.0")
        addr.sin_addr.s_addr = INADDR_ANY;
    else if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw TransportError("tcp: bad listen address " + host);
    if (::bind(fd_, (sockaddr*)&addr, sizeof(addr)) != 0)
        throw TransportError("tcp: cannot bind " + host + ":" + std::to_string(port));
    if (::listen(fd_, 1) != 0) throw TransportError("tcp: listen failed");
    socklen_t len = sizeof(addr);
    getsockname(fd_, (sockaddr*)&addr, &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

std::shared_ptr<ByteStream> TcpListener::accept() {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw TransportError("tcp: accept failed");
    return std::make_shared<SocketStream>(fd);
}

}  // namespace stls
