// hades: command-line front end.
//
// Subcommands:
//   keygen     derive owner key material, write the seed and public files
//   profile    learn a whitelist from a benign trace on a device image
//   enforce    replay a trace against a whitelist, print the decision log
//   sign       sign a control command; save the frame or send it to a device
//   serve      run the device-side control server (optionally replay a trace)
//   scenarios  run the packaged intrusion scenarios and report detection
//
// stdout carries machine-readable results, stderr human commentary.
// Exit codes: 0 success; 1 operational findings (denials, missed detection,
// rejected command); 2 bad input or environment.

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "hades/ots.hpp"
#include "hades/server.hpp"
#include "hades/sim.hpp"

using namespace hades;

namespace {

struct HostPort {
    std::string host;
    std::uint16_t port = 0;
};

HostPort parse_host_port(const std::string& s) {
    auto colon = s.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == s.size())
        throw Error("expected HOST:PORT, got '" + s + "'");
    int port = 0;
    try {
        port = std::stoi(s.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error("bad port in '" + s + "'");
    }
    if (port < 1 || port > 65535) throw Error("port out of range in '" + s + "'");
    return {s.substr(0, colon), static_cast<std::uint16_t>(port)};
}

// Public companion of a seed file: everything the device needs to verify.
void write_pub_file(const std::string& path, const ots::MerkleKeyMaterial& km) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "HADESPUB v1\n"
        << "k " << km.k() << "\n"
        << "n " << km.leaf_count() << "\n"
        << "root " << to_hex(km.root()) << "\n";
}

struct PubKeyInfo {
    unsigned k = 0;
    std::uint32_t n = 0;
    Bytes root;
};

PubKeyInfo read_pub_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::string header;
    std::getline(in, header);
    if (header != "HADESPUB v1") throw Error(path + ": not a public key file");
    PubKeyInfo info;
    std::string key;
    while (in >> key) {
        if (key == "k")
            in >> info.k;
        else if (key == "n")
            in >> info.n;
        else if (key == "root") {
            std::string hex;
            in >> hex;
            info.root = from_hex(hex);
        } else {
            throw Error(path + ": unexpected field '" + key + "'");
        }
    }
    if (info.k == 0 || info.n == 0 || info.root.empty())
        throw Error(path + ": incomplete public key file");
    return info;
}

Engine make_engine(const sim::DeviceImage& img, FileMap& fs, std::uint64_t quiet_ms) {
    EngineConfig cfg;
    cfg.engine_binary_path = img.engine_binary;
    cfg.init_script_path = img.init_script;
    cfg.quiet_period_ms = quiet_ms;
    return Engine::bootstrap(fs, cfg);
}

int cmd_keygen(unsigned k, std::uint32_t n, const std::string& out,
               const std::string& seed_hex) {
    ots::MerkleKeyMaterial km =
        seed_hex.empty() ? ots::MerkleKeyMaterial::generate(n, k)
                         : ots::MerkleKeyMaterial(from_hex(seed_hex), n, k);
    km.save_file(out);
    write_pub_file(out + ".pub", km);
    std::cout << "root " << to_hex(km.root()) << "\n"
              << "k " << k << "\n"
              << "n " << n << "\n"
              << "private-key-bytes " << (2u * k * k / 8) << "\n"
              << "signature-bytes " << (k * k / 8) << "\n"
              << "merkle-signature-bytes " << ots::merkle_signature_size(k, n) << "\n";
    std::cerr << "wrote seed to " << out << " and verifier data to " << out << ".pub\n";
    return 0;
}

int cmd_profile(const std::string& image, const std::string& trace, const std::string& out,
                std::uint64_t quiet_sec) {
    sim::DeviceImage img = sim::load_manifest(image);
    std::vector<sim::TraceRecord> records = sim::load_trace(trace);
    FileMap fs = img.files;
    Engine eng = make_engine(img, fs, quiet_sec * 1000);
    sim::replay(eng, fs, img, records);
    std::uint64_t end_t = records.empty() ? 0 : records.back().t_ms;
    bool complete = eng.profiling_complete(end_t + quiet_sec * 1000);
    eng.whitelist().save_file(out);
    std::cout << "entries " << eng.whitelist().size() << "\n"
              << "profiling-complete " << (complete ? "yes" : "no") << "\n";
    std::cerr << "wrote whitelist to " << out << "\n";
    return 0;
}

int cmd_enforce(const std::string& image, const std::string& trace,
                const std::string& whitelist) {
    sim::DeviceImage img = sim::load_manifest(image);
    std::vector<sim::TraceRecord> records = sim::load_trace(trace);
    FileMap fs = img.files;
    Engine eng = make_engine(img, fs, 3'600'000);
    eng.set_whitelist(Whitelist::load_file(whitelist));
    eng.set_mode(Mode::Enforcing);
    sim::ReplayResult res = sim::replay(eng, fs, img, records);
    std::cout << sim::render_decision_log(res.decisions);
    std::size_t denials = res.reports.size();
    std::cerr << res.decisions.size() << " events, " << denials << " denial"
              << (denials == 1 ? "" : "s") << "\n";
    return denials ? 1 : 0;
}

Command build_command(const std::string& name, const std::string& entry_id_hex,
                      const std::string& kind_name, const std::string& label) {
    auto need_id = [&]() {
        if (entry_id_hex.empty()) throw Error(name + " requires --entry-id");
        return entry_id_from_hex(entry_id_hex);
    };
    if (name == "stop") return Command::simple(CommandCode::Stop);
    if (name == "start") return Command::simple(CommandCode::Start);
    if (name == "profile") return Command::simple(CommandCode::Profile);
    if (name == "protect") return Command::simple(CommandCode::Protect);
    if (name == "add-entry") {
        auto kind = entry_kind_from_name(kind_name);
        if (!kind) throw Error("unknown entry kind '" + kind_name + "'");
        return Command::add_entry(need_id(), *kind, label);
    }
    if (name == "remove-entry") return Command::remove_entry(need_id());
    throw Error("unknown command '" + name + "'");
}

int cmd_sign(const std::string& keyfile, std::uint32_t leaf, const std::string& command,
             const std::string& entry_id_hex, const std::string& kind_name,
             const std::string& label, const std::string& out, const std::string& send) {
    ots::MerkleKeyMaterial km = ots::MerkleKeyMaterial::load_file(keyfile);
    Command cmd = build_command(command, entry_id_hex, kind_name, label);
    SignedCommand sc = owner_sign_command(km, leaf, cmd);
    Bytes frame = encode_frame(Frame{MsgType::Command, encode_signed_command(sc)});

    if (!out.empty()) {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw Error("cannot write " + out);
        f.write(reinterpret_cast<const char*>(frame.data()),
                static_cast<std::streamsize>(frame.size()));
        std::cerr << "wrote signed " << command << " frame (leaf " << leaf << ") to " << out
                  << "\n";
    }
    if (!send.empty()) {
        HostPort hp = parse_host_port(send);
        net::Socket sock = net::Socket::connect(hp.host, hp.port);
        sock.write_all(frame);
        FrameDecoder dec;
        auto resp_frame = net::read_frame(sock, dec);
        if (!resp_frame || resp_frame->type != MsgType::Response)
            throw Error("device did not answer with a response frame");
        Response resp = decode_response(resp_frame->payload);
        std::cout << "status " << verify_status_name(resp.status) << "\n"
                  << "counter " << resp.counter << "\n";
        if (!resp.detail.empty()) std::cout << "detail " << resp.detail << "\n";
        return resp.status == VerifyStatus::Accepted ? 0 : 1;
    }
    if (out.empty()) throw Error("sign needs --out and/or --send");
    return 0;
}

int cmd_serve(const std::string& pubfile, const std::string& image,
              const std::string& whitelist, const std::string& trace, std::uint16_t listen,
              const std::string& owner, bool protect) {
    PubKeyInfo pub = read_pub_file(pubfile);
    sim::DeviceImage img = sim::load_manifest(image);
    FileMap fs = img.files;
    Engine eng = make_engine(img, fs, 3'600'000);
    if (!whitelist.empty()) eng.set_whitelist(Whitelist::load_file(whitelist));
    if (protect) eng.set_mode(Mode::Enforcing);

    ControlServer::Config cfg;
    cfg.listen_port = listen;
    if (!owner.empty()) {
        HostPort hp = parse_host_port(owner);
        cfg.owner_host = hp.host;
        cfg.owner_port = hp.port;
    }
    ControlServer server(eng, fs, CommandVerifier(pub.root, pub.k, pub.n), cfg);
    server.start();
    std::cout << "listening " << server.port() << "\n" << std::flush;

    if (!trace.empty()) {
        std::vector<sim::TraceRecord> records = sim::load_trace(trace);
        sim::drive(img, fs, records, 1, 0, [&](const DeviceEvent& ev) {
            // process_event locks around the engine; fs mutations from drive
            // happen on this thread between events.
            Engine::Outcome outcome = server.process_event(ev);
            std::cout << decision_line(outcome.decision) << "\n";
        });
        std::cout << std::flush;
    }

    // Stay up until the controlling process closes stdin.
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line == "quit") break;
    }
    server.wait_reports_drained(std::chrono::milliseconds(2000));
    StatusSnapshot st = server.status();
    server.stop();
    std::cerr << "mode " << mode_name(st.mode) << ", events " << st.events_processed
              << ", whitelist " << st.whitelist_count << ", counter " << st.replay_counter
              << "\n";
    return 0;
}

int cmd_scenarios(const std::string& fixtures, std::vector<std::string> only) {
    std::vector<std::filesystem::path> paths = sim::find_scenarios(fixtures);
    if (!only.empty()) {
        std::vector<std::filesystem::path> filtered;
        for (const std::string& name : only) {
            bool found = false;
            for (const auto& p : paths)
                if (p.stem() == name) {
                    filtered.push_back(p);
                    found = true;
                }
            if (!found) throw sim::UnknownScenario("no scenario named '" + name + "'");
        }
        paths = std::move(filtered);
    }
    if (paths.empty()) throw Error("no scenarios found under " + fixtures);

    bool all_ok = true;
    for (const auto& path : paths) {
        sim::ScenarioRun run = sim::run_scenario(path);
        std::string device = path.parent_path().parent_path().filename().string();
        std::ostringstream denials;
        for (std::size_t i = 0; i < run.denied_seqs.size(); ++i)
            denials << (i ? "," : "") << run.denied_seqs[i];
        bool ok = run.detected && run.denials_match;
        all_ok = all_ok && ok;
        std::cout << run.scenario.name << " device=" << device
                  << " whitelist=" << run.whitelist_size << " first="
                  << (run.denied_seqs.empty() ? 0 : run.denied_seqs.front()) << "/"
                  << run.scenario.expected_first_denial << " denials=" << denials.str()
                  << " detected=" << (run.detected ? "yes" : "no")
                  << " match=" << (run.denials_match ? "yes" : "no") << " t_ms="
                  << static_cast<long>(run.elapsed_seconds * 1000.0) << "\n";
    }
    std::cout << "all-detected " << (all_ok ? "yes" : "no") << "\n";
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"whitelist-driven execution policy engine for embedded devices"};
    app.require_subcommand(1);
    std::function<int()> action;

    // keygen
    auto* keygen = app.add_subcommand("keygen", "derive owner key material");
    unsigned kg_k = 16;
    std::uint32_t kg_n = 32;
    std::string kg_out, kg_seed;
    keygen->add_option("--k", kg_k, "hash truncation in bits (multiple of 8, 16..256)");
    keygen->add_option("--n", kg_n, "one-time leaves (power of two)");
    keygen->add_option("--out", kg_out, "seed file to write")->required();
    keygen->add_option("--seed-hex", kg_seed, "fixed seed instead of fresh entropy");
    keygen->callback([&] { action = [&] { return cmd_keygen(kg_k, kg_n, kg_out, kg_seed); }; });

    // profile
    auto* profile = app.add_subcommand("profile", "learn a whitelist from a benign trace");
    std::string pf_image, pf_trace, pf_out;
    std::uint64_t pf_quiet = 3600;
    profile->add_option("--image", pf_image, "device image manifest")->required();
    profile->add_option("--trace", pf_trace, "benign trace (JSONL)")->required();
    profile->add_option("--out", pf_out, "whitelist file to write")->required();
    profile->add_option("--quiet-sec", pf_quiet, "quiet period for completion (seconds)");
    profile->callback(
        [&] { action = [&] { return cmd_profile(pf_image, pf_trace, pf_out, pf_quiet); }; });

    // enforce
    auto* enforce = app.add_subcommand("enforce", "replay a trace against a whitelist");
    std::string en_image, en_trace, en_wl;
    enforce->add_option("--image", en_image, "device image manifest")->required();
    enforce->add_option("--trace", en_trace, "trace to replay (JSONL)")->required();
    enforce->add_option("--whitelist", en_wl, "whitelist file")->required();
    enforce->callback(
        [&] { action = [&] { return cmd_enforce(en_image, en_trace, en_wl); }; });

    // sign
    auto* sign = app.add_subcommand("sign", "sign a control command");
    std::string sg_key, sg_cmd, sg_id, sg_kind = "exec", sg_label, sg_out, sg_send;
    std::uint32_t sg_leaf = 0;
    sign->add_option("--keyfile", sg_key, "owner seed file")->required();
    sign->add_option("--leaf", sg_leaf, "one-time leaf index (1-based)")->required();
    sign->add_option("--cmd", sg_cmd,
                     "stop|start|profile|protect|add-entry|remove-entry")
        ->required();
    sign->add_option("--entry-id", sg_id, "entry id hex (add-entry/remove-entry)");
    sign->add_option("--kind", sg_kind, "entry kind for add-entry (exec|insmod|rmmod|signal)");
    sign->add_option("--label", sg_label, "entry label for add-entry");
    sign->add_option("--out", sg_out, "write the signed command frame here");
    sign->add_option("--send", sg_send, "send to a device at HOST:PORT");
    sign->callback([&] {
        action = [&] {
            return cmd_sign(sg_key, sg_leaf, sg_cmd, sg_id, sg_kind, sg_label, sg_out, sg_send);
        };
    });

    // serve
    auto* serve = app.add_subcommand("serve", "run the device-side control server");
    std::string sv_pub, sv_image, sv_wl, sv_trace, sv_owner;
    std::uint16_t sv_listen = 0;
    bool sv_protect = false;
    serve->add_option("--pubfile", sv_pub, "verifier data (.pub from keygen)")->required();
    serve->add_option("--image", sv_image, "device image manifest")->required();
    serve->add_option("--whitelist", sv_wl, "whitelist file to preload");
    serve->add_option("--trace", sv_trace, "trace to replay through the engine");
    serve->add_option("--listen", sv_listen, "TCP port (0 = ephemeral, printed)");
    serve->add_option("--owner", sv_owner, "owner endpoint HOST:PORT for reports");
    serve->add_flag("--protect", sv_protect, "start in enforcing mode");
    serve->callback([&] {
        action = [&] {
            return cmd_serve(sv_pub, sv_image, sv_wl, sv_trace, sv_listen, sv_owner,
                             sv_protect);
        };
    });

    // scenarios
    auto* scen = app.add_subcommand("scenarios", "run the packaged intrusion scenarios");
    std::string sc_fixtures = "fixtures";
    std::vector<std::string> sc_only;
    scen->add_option("--fixtures", sc_fixtures, "fixtures directory");
    scen->add_option("--only", sc_only, "run only the named scenario(s)");
    scen->callback([&] { action = [&] { return cmd_scenarios(sc_fixtures, sc_only); }; });

    CLI11_PARSE(app, argc, argv);
    try {
        return action();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
