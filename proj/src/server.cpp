#include "hades/server.hpp"

#include <utility>

namespace hades {

using namespace std::chrono_literals;

ControlServer::ControlServer(Engine& engine, FileMap& fs, CommandVerifier verifier, Config cfg)
    : engine_(engine), fs_(fs), verifier_(std::move(verifier)), cfg_(std::move(cfg)) {}

ControlServer::~ControlServer() { stop(); }

void ControlServer::start() {
    listener_ = net::Listener::bind(cfg_.listen_host, cfg_.listen_port);
    running_.store(true);
    accept_thread_ = std::thread(&ControlServer::accept_loop, this);
    if (!cfg_.owner_host.empty())
        report_thread_ = std::thread(&ControlServer::report_loop, this);
}

void ControlServer::stop() {
    running_.store(false);
    queue_cv_.notify_all();
    listener_.close(); // unblocks accept()
    {
        std::lock_guard lk(conn_mutex_);
        for (net::Socket* s : open_conns_) s->shutdown_both();
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    // The accept loop has exited, so no further connection threads appear.
    std::vector<std::thread> conns;
    {
        std::lock_guard lk(conn_mutex_);
        conns.swap(conn_threads_);
    }
    for (std::thread& t : conns) t.join();
    if (report_thread_.joinable()) report_thread_.join();
}

Engine::Outcome ControlServer::process_event(const DeviceEvent& ev) {
    Engine::Outcome out;
    {
        std::lock_guard lk(state_mutex_);
        out = engine_.handle_event(ev, fs_);
    }
    if (out.report) {
        {
            std::lock_guard lk(queue_mutex_);
            if (report_queue_.size() >= cfg_.report_capacity) {
                report_queue_.pop_front();
                ++dropped_total_;
            }
            report_queue_.push_back(*out.report);
        }
        queue_cv_.notify_one();
    }
    return out;
}

StatusSnapshot ControlServer::status() const {
    StatusSnapshot s;
    {
        std::lock_guard lk(state_mutex_);
        s.mode = engine_.mode();
        s.replay_counter = verifier_.replay_counter();
        s.whitelist_count = engine_.whitelist().size();
        s.events_processed = engine_.events_processed();
    }
    {
        std::lock_guard lk(queue_mutex_);
        s.reports_dropped = dropped_total_;
    }
    return s;
}

std::uint32_t ControlServer::reports_dropped() const {
    std::lock_guard lk(queue_mutex_);
    return dropped_total_;
}

std::size_t ControlServer::reports_pending() const {
    std::lock_guard lk(queue_mutex_);
    return report_queue_.size();
}

bool ControlServer::wait_reports_drained(std::chrono::milliseconds timeout) {
    std::unique_lock lk(queue_mutex_);
    return drained_cv_.wait_for(lk, timeout, [&] { return report_queue_.empty(); });
}

std::uint32_t ControlServer::counter_snapshot() const {
    std::lock_guard lk(state_mutex_);
    return verifier_.replay_counter();
}

void ControlServer::accept_loop() {
    while (running_.load()) {
        net::Socket sock;
        try {
            sock = listener_.accept();
        } catch (const Error&) {
            break; // listener closed by stop()
        }
        std::lock_guard lk(conn_mutex_);
        if (!running_.load()) break; // raced with stop(); drop the connection
        conn_threads_.emplace_back(&ControlServer::serve_connection, this, std::move(sock));
    }
}

void ControlServer::serve_connection(net::Socket sock) {
    {
        std::lock_guard lk(conn_mutex_);
        open_conns_.push_back(&sock);
    }
    FrameDecoder dec;
    try {
        for (;;) {
            std::optional<Frame> f = net::read_frame(sock, dec);
            if (!f) break; // orderly close
            switch (f->type) {
            case MsgType::Command: {
                Response resp;
                bool decoded = false;
                SignedCommand sc;
                try {
                    sc = decode_signed_command(f->payload);
                    decoded = true;
                } catch (const ParseError& e) {
                    resp = Response{VerifyStatus::MalformedFrame, counter_snapshot(), e.what()};
                }
                if (decoded) {
                    std::lock_guard lk(state_mutex_);
                    VerifyResult vr = verifier_.verify_and_accept(sc);
                    if (vr.status == VerifyStatus::Accepted) engine_.apply_command(sc.command);
                    resp = Response{vr.status, vr.counter, vr.detail};
                }
                net::write_frame(sock, Frame{MsgType::Response, encode_response(resp)});
                break;
            }
            case MsgType::StatusRequest: {
                net::write_frame(sock, Frame{MsgType::Status, encode_status(status())});
                break;
            }
            default: {
                // Device-bound streams never carry Response/Report/Status.
                Response resp{VerifyStatus::MalformedFrame, counter_snapshot(),
                              "unexpected message type"};
                net::write_frame(sock, Frame{MsgType::Response, encode_response(resp)});
                break;
            }
            }
        }
    } catch (const MalformedFrameError& e) {
        // Framing is gone: answer best-effort, then drop the connection.
        try {
            Response resp{VerifyStatus::MalformedFrame, counter_snapshot(), e.what()};
            net::write_frame(sock, Frame{MsgType::Response, encode_response(resp)});
        } catch (const Error&) {
        }
    } catch (const Error&) {
        // I/O failure (peer reset, shutdown during stop): just drop.
    }
    std::lock_guard lk(conn_mutex_);
    std::erase(open_conns_, &sock);
}

void ControlServer::report_loop() {
    net::Socket owner;
    for (;;) {
        Report next;
        std::uint32_t dropped = 0;
        {
            std::unique_lock lk(queue_mutex_);
            queue_cv_.wait(lk, [&] { return !running_.load() || !report_queue_.empty(); });
            if (report_queue_.empty()) {
                if (!running_.load()) break; // drained, shutting down
                continue;
            }
            next = report_queue_.front();
            dropped = dropped_total_;
        }
        if (!owner.valid()) {
            try {
                owner = net::Socket::connect(cfg_.owner_host, cfg_.owner_port);
            } catch (const Error&) {
                if (!running_.load()) break; // owner unreachable at shutdown
                std::this_thread::sleep_for(50ms);
                continue;
            }
        }
        try {
            net::write_frame(owner, Frame{MsgType::Report, encode_report(next, dropped)});
        } catch (const Error&) {
            owner.close(); // reconnect and resend on the next pass
            continue;
        }
        {
            std::lock_guard lk(queue_mutex_);
            report_queue_.pop_front(); // only this thread pops
        }
        drained_cv_.notify_all();
    }
}

} // namespace hades
