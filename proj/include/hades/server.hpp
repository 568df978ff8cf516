#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include "hades/engine.hpp"
#include "hades/net.hpp"
#include "hades/protocol.hpp"

namespace hades {

// Device-side control server. Accepts owner connections, verifies signed
// commands against the master root under the replay rule, applies accepted
// commands to the engine, answers status requests, and forwards denial
// reports to the owner endpoint. Commands and device events are serialized
// through one mutex, so verification and application are atomic with respect
// to event processing.
class ControlServer {
public:
    struct Config {
        std::string listen_host = "127.0.0.1";
        std::uint16_t listen_port = 0; // 0 picks an ephemeral port
        std::string owner_host;        // empty disables report forwarding
        std::uint16_t owner_port = 0;
        std::size_t report_capacity = 1024; // oldest reports dropped beyond this
    };

    // The engine and filesystem stay owned by the caller and must outlive the
    // server.
    ControlServer(Engine& engine, FileMap& fs, CommandVerifier verifier, Config cfg);
    ~ControlServer();

    ControlServer(const ControlServer&) = delete;
    ControlServer& operator=(const ControlServer&) = delete;

    void start(); // binds and spawns the accept/report threads
    void stop();  // idempotent; flushes queued reports while the owner is reachable

    std::uint16_t port() const { return listener_.port(); }

    // Feeds one device event through the engine; denials are queued for the
    // owner. Safe to call while connections are active.
    Engine::Outcome process_event(const DeviceEvent& ev);

    StatusSnapshot status() const;
    std::uint32_t reports_dropped() const;
    std::size_t reports_pending() const;

    // Blocks until every queued report has been written to the owner or the
    // timeout elapses; returns true when drained.
    bool wait_reports_drained(std::chrono::milliseconds timeout);

private:
    void accept_loop();
    void serve_connection(net::Socket sock);
    void report_loop();
    std::uint32_t counter_snapshot() const;

    Engine& engine_;
    FileMap& fs_;
    CommandVerifier verifier_;
    Config cfg_;

    mutable std::mutex state_mutex_; // engine, fs, verifier
    net::Listener listener_;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::thread report_thread_;
    std::mutex conn_mutex_;
    std::vector<std::thread> conn_threads_;
    std::vector<net::Socket*> open_conns_;

    mutable std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::condition_variable drained_cv_;
    std::deque<Report> report_queue_;
    std::uint32_t dropped_total_ = 0;
};

} // namespace hades
