#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hades/protocol.hpp"

// Minimal blocking TCP wrappers used by the control server, the CLI, and the
// loopback test harnesses.
namespace hades::net {

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept;
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket();

    static Socket connect(const std::string& host, std::uint16_t port); // throws Error

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

    // Returns 0 on orderly remote close; throws Error on failure.
    std::size_t read_some(std::uint8_t* buf, std::size_t cap);
    void write_all(ByteView data);

    // Unblocks reads/writes in other threads without releasing the fd.
    void shutdown_both();
    void close();

private:
    int fd_ = -1;
};

class Listener {
public:
    Listener() = default;
    Listener(Listener&& other) noexcept;
    Listener& operator=(Listener&& other) noexcept;
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;
    ~Listener();

    // Binds on the given host (port 0 picks an ephemeral port).
    static Listener bind(const std::string& host, std::uint16_t port); // throws Error

    std::uint16_t port() const { return port_; }
    bool valid() const { return fd_ >= 0; }

    // Blocks until a connection arrives; throws Error once closed.
    Socket accept();
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

void write_frame(Socket& s, const Frame& f);

// Blocks until one full frame is available. Returns nullopt on clean EOF at a
// frame boundary; throws MalformedFrameError on garbage or mid-frame EOF.
std::optional<Frame> read_frame(Socket& s, FrameDecoder& dec);

} // namespace hades::net
