#include "pufrla/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <stdexcept>

namespace pufrla {

namespace {

constexpr std::uint32_t kMaxFrameLen = 1024;

std::uint64_t steady_now_ms() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::steady_clock::now().time_since_epoch())
                                          .count());
}

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
    while (len > 0) {
        ssize_t n = ::write(fd, data, len);
        if (n < 0) throw std::runtime_error("socket write failed");
        data += n;
        len -= static_cast<std::size_t>(n);
    }
}

// false on clean EOF at the first byte, throws on mid-read EOF.
bool read_exact(int fd, std::uint8_t* data, std::size_t len) {
    std::size_t got = 0;
    while (got < len) {
        ssize_t n = ::read(fd, data + got, len - got);
        if (n < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK)
                throw SocketTimeout("socket read timed out");
            throw std::runtime_error("socket read failed");
        }
        if (n == 0) {
            if (got == 0) return false;
            throw std::runtime_error("socket closed mid-frame");
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

}  // namespace

FrameSocket::~FrameSocket() {
    if (fd_ >= 0) ::close(fd_);
}

void FrameSocket::write_frame(const std::vector<std::uint8_t>& frame) {
    write_all(fd_, frame.data(), frame.size());
}

void FrameSocket::set_read_timeout_ms(std::uint64_t ms) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(ms / 1000);
    tv.tv_usec = static_cast<suseconds_t>((ms % 1000) * 1000);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

std::optional<std::vector<std::uint8_t>> FrameSocket::read_frame() {
    std::uint8_t header[4];
    if (!read_exact(fd_, header, 4)) return std::nullopt;
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len = len << 8 | header[i];
    if (len == 0 || len > kMaxFrameLen) throw std::runtime_error("bad frame length on socket");
    std::vector<std::uint8_t> frame(4 + len);
    std::memcpy(frame.data(), header, 4);
    if (!read_exact(fd_, frame.data() + 4, len))
        throw std::runtime_error("socket closed mid-frame");
    return frame;
}

FrameSocket tcp_connect(const std::string& host, std::uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw std::runtime_error("bad host address: " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw std::runtime_error("connect failed");
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return FrameSocket(fd);
}

TcpListener::TcpListener(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw std::runtime_error("bind failed");
    }
    if (::listen(fd_, 8) != 0) {
        ::close(fd_);
        throw std::runtime_error("listen failed");
    }
    socklen_t len = sizeof(addr);
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        ::close(fd_);
        throw std::runtime_error("getsockname failed");
    }
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

FrameSocket TcpListener::accept_one() {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw std::runtime_error("accept failed");
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return FrameSocket(fd);
}

ServeStats serve_connection(FrameSocket& sock, const Database& db, const MasterSecret& ms,
                            const BchCode& code, Prng64& nonce_rng, std::uint64_t rounds,
                            std::vector<std::vector<std::uint8_t>>* transcript) {
    ServeStats stats;
    auto send = [&](const Message& m) {
        auto frame = encode_frame(m);
        if (transcript) transcript->push_back(frame);
        sock.write_frame(frame);
    };
    for (std::uint64_t round = 0; round < rounds; ++round) {
        ServerSession session(db, ms, code, nonce_rng);
        ++stats.sessions;
        send(session.start());
        bool done = false;
        while (!done) {
            std::optional<std::vector<std::uint8_t>> frame;
            try {
                frame = sock.read_frame();
            } catch (const SocketTimeout&) {
                break;  // device went quiet (voided round); abandon the session
            }
            if (!frame) return stats;  // peer gone
            if (transcript) transcript->push_back(*frame);
            Message msg = decode_frame(*frame);
            for (const Message& reply : session.on_message(msg)) {
                if (const auto* result = std::get_if<ResultMsg>(&reply)) {
                    ++stats.rounds;
                    if (result->accept) ++stats.accepts;
                    done = true;
                }
                send(reply);
            }
            if (session.phase() == ServerSession::Phase::kDone) done = true;
        }
    }
    return stats;
}

DeviceRunStats run_device_connection(FrameSocket& sock, Device& device, std::uint64_t rounds,
                                     std::vector<std::vector<std::uint8_t>>* transcript) {
    DeviceRunStats stats;
    while (stats.rounds < rounds) {
        auto frame = sock.read_frame();
        if (!frame) break;
        if (transcript) transcript->push_back(*frame);
        Message msg = decode_frame(*frame);
        if (const auto* result = std::get_if<ResultMsg>(&msg)) {
            ++stats.rounds;
            if (result->accept) ++stats.accepts;
        }
        for (const Message& reply : device.on_message(msg, steady_now_ms())) {
            auto out = encode_frame(reply);
            if (transcript) transcript->push_back(out);
            sock.write_frame(out);
        }
    }
    stats.final_state = device.state();
    return stats;
}

}  // namespace pufrla
