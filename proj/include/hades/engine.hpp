#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hades/digest.hpp"
#include "hades/whitelist.hpp"

// The decision core: consumes device events, runs the profiling/enforcing
// state machine, emits allow/deny decisions, keeps tamper-proof shadow copies
// of the protected files, and raises a report for every denial.
namespace hades {

class MissingProtectedFile : public Error {
public:
    using Error::Error;
};

class UnresolvedBinary : public Error {
public:
    using Error::Error;
};

class WrongMode : public Error {
public:
    using Error::Error;
};

enum class Mode : std::uint8_t {
    Profiling = 0, // learning: every event is recorded as authorized
    Enforcing = 1, // protection: non-whitelisted events are denied
    Stopped = 2,   // protection disabled (e.g. during firmware updates)
};

const char* mode_name(Mode m);

// Virtual filesystem: path -> file content.
using FileMap = std::map<std::string, Bytes>;

// Events carry bytes already resolved against the virtual filesystem by the
// simulator; an absent optional means the path did not resolve, which is a
// malformed trace (UnresolvedBinary), not a detection.
struct ExecEvent {
    std::string path;
    std::vector<std::string> args;
    std::optional<Bytes> program_bytes;
};

struct KillEvent {
    std::string sender_path;
    int signal = 0;
    std::string target_path;
};

struct InsertModuleEvent {
    std::string insmod_path;
    std::optional<Bytes> insmod_bytes;
    Bytes lkm_bytes;
    std::string lkm_name;
};

struct RemoveModuleEvent {
    std::string rmmod_path;
    std::optional<Bytes> rmmod_bytes;
    std::string lkm_name;
};

struct RebootEvent {};

using EventPayload =
    std::variant<ExecEvent, KillEvent, InsertModuleEvent, RemoveModuleEvent, RebootEvent>;

struct DeviceEvent {
    std::uint64_t seq = 0;  // strictly increasing within a trace
    std::uint64_t t_ms = 0; // logical time, integer milliseconds
    EventPayload payload;
};

enum class EventClass : std::uint8_t { Exec, Kill, Insmod, Rmmod, Reboot };
const char* event_class_name(EventClass c);

// Deny codes: exec-class denials surface as "not implemented" (the denied
// process sees its exec syscall fail as if absent); blocked signals surface as
// "permission denied", since "not implemented" would be observably wrong to
// benign shells issuing kill.
enum class DenyCode : std::uint8_t { None = 0, NotImplemented = 1, PermissionDenied = 2 };

enum class DecisionReason : std::uint8_t {
    Whitelisted,    // entry present in the whitelist
    Profiled,       // newly learned during profiling
    ProtectionOff,  // engine stopped
    NotWhitelisted, // denied in enforcing mode
    Reboot,         // reboot bookkeeping event
};

const char* decision_reason_name(DecisionReason r);

struct Decision {
    std::uint64_t seq = 0;
    EventClass event_class = EventClass::Exec;
    bool allowed = true;
    DenyCode code = DenyCode::None;
    DecisionReason reason = DecisionReason::Whitelisted;
    EntryId entry_id{}; // all-zero for reboot events
};

// One line per decision: "<seq> <verdict> <event> <entry-id-hex> <reason>",
// verdict one of allow | deny(ENOSYS) | deny(EPERM).
std::string decision_line(const Decision& d);

// Raised on every denial, in order; the control server forwards these to the
// owner endpoint.
struct Report {
    std::uint64_t seq = 0;
    EntryId entry_id{};
    EntryKind kind = EntryKind::ExecProgram;
    DenyCode code = DenyCode::None;
    std::string origin; // path or "sender -> signal -> target"

    bool operator==(const Report&) const = default;
};

enum class CommandCode : std::uint8_t {
    Stop = 1,        // disable protection, remember previous mode
    Start = 2,       // resume the mode saved by Stop
    Profile = 3,     // enter profiling (whitelist preserved)
    Protect = 4,     // enter enforcing
    AddEntry = 5,    // insert an entry id into the whitelist
    RemoveEntry = 6, // remove an entry id
};

const char* command_code_name(CommandCode c);

// A control command after signature verification; nothing unauthenticated may
// reach Engine::apply_command.
struct Command {
    CommandCode code = CommandCode::Stop;
    EntryId entry_id{};  // AddEntry / RemoveEntry
    EntryKind entry_kind = EntryKind::ExecProgram; // AddEntry
    std::string label;   // AddEntry

    bool operator==(const Command&) const = default;

    static Command simple(CommandCode code) {
        Command c;
        c.code = code;
        return c;
    }
    static Command add_entry(const EntryId& id, EntryKind kind, std::string label) {
        Command c;
        c.code = CommandCode::AddEntry;
        c.entry_id = id;
        c.entry_kind = kind;
        c.label = std::move(label);
        return c;
    }
    static Command remove_entry(const EntryId& id) {
        Command c;
        c.code = CommandCode::RemoveEntry;
        c.entry_id = id;
        return c;
    }
};

struct EngineConfig {
    std::string engine_binary_path;
    std::string init_script_path;
    std::uint64_t quiet_period_ms = 3'600'000; // 1 logical hour
};

class Engine {
public:
    // Captures shadow copies of the two protected paths and enters Profiling.
    // Throws MissingProtectedFile if either path is absent from the filesystem.
    static Engine bootstrap(const FileMap& fs, EngineConfig cfg);

    Mode mode() const { return mode_; }
    const Whitelist& whitelist() const { return whitelist_; }
    const FileMap& shadow_files() const { return shadow_files_; }
    std::uint64_t events_processed() const { return events_processed_; }

    // Replaces the whitelist wholesale (loading a previously profiled file).
    void set_whitelist(Whitelist wl) { whitelist_ = std::move(wl); }
    void set_mode(Mode m);

    struct Outcome {
        Decision decision;
        std::optional<Report> report;
    };

    // Processes one event in seq order. Reboot restores the shadow copies into
    // `fs` regardless of current content; the mode survives reboots.
    Outcome handle_event(const DeviceEvent& ev, FileMap& fs);

    // True iff the quiet period elapsed with no new whitelist insertions.
    // Throws WrongMode unless profiling.
    bool profiling_complete(std::uint64_t now_ms) const;

    // Applies an authenticated control command.
    void apply_command(const Command& cmd);

private:
    Engine() = default;

    EngineConfig cfg_;
    Mode mode_ = Mode::Profiling;
    Mode resume_mode_ = Mode::Profiling; // restored by Start after Stop
    Whitelist whitelist_;
    FileMap shadow_files_;
    std::uint64_t quiet_since_ms_ = 0; // last bootstrap/insertion/profile entry
    std::uint64_t last_event_t_ms_ = 0;
    std::uint64_t last_seq_ = 0;
    std::uint64_t events_processed_ = 0;
};

} // namespace hades
