#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pufrla/harness.hpp"
#include "pufrla/protocol.hpp"

namespace pufrla {

// Length-prefixed frame stream over a connected socket. The framing is the
// protocol's own wire layout, so transcripts are byte-identical to the
// in-process channel.
class SocketTimeout : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FrameSocket {
public:
    explicit FrameSocket(int fd) : fd_(fd) {}
    FrameSocket(const FrameSocket&) = delete;
    FrameSocket& operator=(const FrameSocket&) = delete;
    FrameSocket(FrameSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    ~FrameSocket();

    void write_frame(const std::vector<std::uint8_t>& frame);
    // Full frame including the length header; nullopt on orderly EOF.
    // Throws SocketTimeout when a read deadline is set and expires.
    std::optional<std::vector<std::uint8_t>> read_frame();

    void set_read_timeout_ms(std::uint64_t ms);

    int fd() const { return fd_; }

private:
    int fd_;
};

FrameSocket tcp_connect(const std::string& host, std::uint16_t port);

class TcpListener {
public:
    explicit TcpListener(std::uint16_t port);  // port 0 picks a free port
    TcpListener(const TcpListener&) = delete;
    ~TcpListener();

    std::uint16_t port() const { return port_; }
    FrameSocket accept_one();

private:
    int fd_;
    std::uint16_t port_;
};

struct ServeStats {
    std::uint64_t sessions = 0;
    std::uint64_t rounds = 0;
    std::uint64_t accepts = 0;
};

// Serves one device connection: initiates rounds with INIT and pumps frames
// until `rounds` results were issued or the peer closes.
ServeStats serve_connection(FrameSocket& sock, const Database& db, const MasterSecret& ms,
                            const BchCode& code, Prng64& nonce_rng, std::uint64_t rounds,
                            std::vector<std::vector<std::uint8_t>>* transcript = nullptr);

struct DeviceRunStats {
    std::uint64_t rounds = 0;
    std::uint64_t accepts = 0;
    DeviceState final_state;
};

// Runs the device side over a connected socket until `rounds` RESULT frames
// arrived or the server closes the connection.
DeviceRunStats run_device_connection(FrameSocket& sock, Device& device, std::uint64_t rounds,
                                     std::vector<std::vector<std::uint8_t>>* transcript = nullptr);

}  // namespace pufrla
