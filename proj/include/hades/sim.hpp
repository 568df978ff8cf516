#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hades/engine.hpp"

// Simulated-device harness: loads a device image (virtual filesystem plus
// boot behavior), replays timestamped trace records through the engine, and
// runs packaged profile-then-attack scenarios.
namespace hades::sim {

class ManifestError : public Error {
public:
    using Error::Error;
};

class TraceError : public Error {
public:
    using Error::Error;
};

// A trace references a binary or module path absent from the (mutated)
// filesystem at that point in the replay.
class TraceResolutionError : public Error {
public:
    using Error::Error;
};

class UnknownScenario : public Error {
public:
    using Error::Error;
};

// Device image: initial filesystem content plus what the init system
// executes on every boot.
struct DeviceImage {
    std::string name;
    std::string engine_binary; // protected path, must exist in `files`
    std::string init_script;   // protected path, must exist in `files`
    std::vector<std::string> boot_exec; // programs executed after each reboot
    FileMap files;
};

// Manifest text format (a small TOML subset: sections, string/integer
// scalars, string/integer arrays, # comments):
//   name = "router-a"
//   engine_binary = "/usr/bin/hades"
//   init_script = "/etc/init.d/rcS"
//   [boot]
//   exec = ["/etc/init.d/rcS", "/bin/busybox"]
//   [files]
//   "/bin/busybox" = "blobs/busybox.bin"   # value: blob path below blob_dir
DeviceImage parse_manifest(const std::string& text, const std::filesystem::path& blob_dir);
DeviceImage load_manifest(const std::filesystem::path& manifest_path);

// Trace records: the five device event kinds plus two simulator-only
// filesystem mutations. `write`/`rm` model attacker file drops and tampering;
// they mutate the virtual filesystem silently and never reach the engine.
enum class RecordKind : std::uint8_t { Exec, Kill, Insmod, Rmmod, Reboot, Write, Rm };

struct TraceRecord {
    RecordKind kind = RecordKind::Exec;
    std::uint64_t t_ms = 0;
    std::string path;              // exec: program; insmod/rmmod: tool; write/rm: target
    std::vector<std::string> args; // exec
    std::string sender;            // kill
    int signal = 0;                // kill
    std::string target;            // kill
    std::string module;            // insmod: path of the kernel module file
    std::string lkm_name;          // insmod/rmmod
    Bytes data;                    // write
};

// Trace text format: one JSON object per line ("JSONL"), e.g.
//   {"t": 0, "kind": "reboot"}
//   {"t": 1200, "kind": "exec", "path": "/bin/busybox", "args": ["sh"]}
//   {"t": 3000, "kind": "kill", "sender": "/bin/sh", "signal": 15, "target": "/usr/sbin/ntpd"}
//   {"t": 4000, "kind": "insmod", "path": "/sbin/insmod", "module": "/lib/modules/x.ko"}
//   {"t": 5000, "kind": "rmmod", "path": "/sbin/rmmod", "lkm_name": "x"}
//   {"t": 6000, "kind": "write", "path": "/tmp/payload", "data": "text or data_b64"}
//   {"t": 6500, "kind": "rm", "path": "/tmp/payload"}
// Unknown fields, missing required fields, and decreasing timestamps are
// TraceError; insmod's lkm_name defaults to the module file stem.
std::vector<TraceRecord> parse_trace(const std::string& text);
std::vector<TraceRecord> load_trace(const std::filesystem::path& trace_path);

// Turns trace records into engine events in order, resolving program and
// module bytes against `fs` at the moment of the event and applying write/rm
// mutations. After every reboot record the image's boot_exec list is injected
// as exec events (the init system restarting services). Event seqs count up
// from `first_seq`; timestamps are shifted by `t_offset`. Returns the next
// unused seq.
std::uint64_t drive(const DeviceImage& image, FileMap& fs, const std::vector<TraceRecord>& trace,
                    std::uint64_t first_seq, std::uint64_t t_offset,
                    const std::function<void(const DeviceEvent&)>& sink);

struct ReplayResult {
    std::vector<Decision> decisions;
    std::vector<Report> reports;
    std::uint64_t next_seq = 1;
};

// drive() with the engine as the sink, collecting decisions and reports.
ReplayResult replay(Engine& engine, FileMap& fs, const DeviceImage& image,
                    const std::vector<TraceRecord>& trace, std::uint64_t first_seq = 1,
                    std::uint64_t t_offset = 0);

std::string render_decision_log(const std::vector<Decision>& decisions);

// A packaged scenario: profile on benign traffic, then enforce against an
// attack replay. Scenario files use the manifest's TOML subset:
//   description = "..."
//   manifest = "../image.manifest"
//   profile_trace = "../traces/benign.trace"
//   attack_trace = "../traces/intrusion.trace"
//   expected_first_denial = 9
//   expected_denials = [9, 11, 12]
// Paths are relative to the scenario file; the name is its stem.
struct Scenario {
    std::string name;
    std::string description;
    std::filesystem::path manifest;
    std::filesystem::path profile_trace;
    std::filesystem::path attack_trace;
    std::uint64_t expected_first_denial = 0;
    std::vector<std::uint64_t> expected_denials;
};

Scenario load_scenario(const std::filesystem::path& expect_path);

struct ScenarioRun {
    Scenario scenario;
    std::size_t whitelist_size = 0;   // learned during the profile phase
    bool profiling_completed = false; // quiet period elapsed after the trace
    std::vector<Decision> attack_decisions;
    std::vector<Report> attack_reports;
    std::vector<std::uint64_t> denied_seqs;
    bool detected = false;      // first denial at or before the expected event
    bool denials_match = false; // denied seqs exactly as expected
    double elapsed_seconds = 0.0;
};

// Phase 1: fresh engine profiles the benign trace on a pristine image.
// Phase 2: another fresh engine takes the learned whitelist, switches to
// enforcing, and replays the attack trace (seqs restart at 1).
ScenarioRun run_scenario(const Scenario& sc);
ScenarioRun run_scenario(const std::filesystem::path& expect_path);

// All scenario files under <root>/<device>/scenarios/*.expect, sorted.
std::vector<std::filesystem::path> find_scenarios(const std::filesystem::path& fixtures_root);

struct ProfileExperiment {
    std::vector<std::size_t> whitelist_sizes; // one per multiplier
    bool identical = true;                    // every multiplier learned the same count
    std::size_t enforce_denials = 0; // denials replaying the same trace in enforcing
};

// Profiles the trace repeated 1x/2x/4x (each pass time-shifted past the last)
// and then replays it once against the 1x whitelist in enforcing mode. A
// stable profile learns identical counts and enforces with zero denials.
ProfileExperiment profile_experiment(const std::filesystem::path& manifest_path,
                                     const std::filesystem::path& trace_path,
                                     const std::vector<unsigned>& multipliers = {1, 2, 4});

} // namespace hades::sim
