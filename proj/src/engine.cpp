#include "hades/engine.hpp"

namespace hades {

const char* mode_name(Mode m) {
    switch (m) {
    case Mode::Profiling: return "profiling";
    case Mode::Enforcing: return "enforcing";
    case Mode::Stopped: return "stopped";
    }
    return "?";
}

const char* event_class_name(EventClass c) {
    switch (c) {
    case EventClass::Exec: return "exec";
    case EventClass::Kill: return "kill";
    case EventClass::Insmod: return "insmod";
    case EventClass::Rmmod: return "rmmod";
    case EventClass::Reboot: return "reboot";
    }
    return "?";
}

const char* decision_reason_name(DecisionReason r) {
    switch (r) {
    case DecisionReason::Whitelisted: return "whitelisted";
    case DecisionReason::Profiled: return "profiled";
    case DecisionReason::ProtectionOff: return "protection-off";
    case DecisionReason::NotWhitelisted: return "not-whitelisted";
    case DecisionReason::Reboot: return "reboot";
    }
    return "?";
}

const char* command_code_name(CommandCode c) {
    switch (c) {
    case CommandCode::Stop: return "stop";
    case CommandCode::Start: return "start";
    case CommandCode::Profile: return "profile";
    case CommandCode::Protect: return "protect";
    case CommandCode::AddEntry: return "add-entry";
    case CommandCode::RemoveEntry: return "remove-entry";
    }
    return "?";
}

std::string decision_line(const Decision& d) {
    std::string verdict =
        d.allowed ? "allow"
                  : (d.code == DenyCode::NotImplemented ? "deny(ENOSYS)" : "deny(EPERM)");
    return std::to_string(d.seq) + " " + verdict + " " + event_class_name(d.event_class) +
           " " + entry_id_hex(d.entry_id) + " " + decision_reason_name(d.reason);
}

Engine Engine::bootstrap(const FileMap& fs, EngineConfig cfg) {
    Engine e;
    for (const std::string* path : {&cfg.engine_binary_path, &cfg.init_script_path}) {
        auto it = fs.find(*path);
        if (it == fs.end())
            throw MissingProtectedFile("protected path absent from filesystem: " + *path);
        e.shadow_files_[*path] = it->second;
    }
    e.cfg_ = std::move(cfg);
    e.mode_ = Mode::Profiling;
    e.resume_mode_ = Mode::Profiling;
    return e;
}

void Engine::set_mode(Mode m) {
    mode_ = m;
    if (m == Mode::Profiling) quiet_since_ms_ = last_event_t_ms_;
}

namespace {

struct EventView {
    EventClass event_class;
    EntryKind kind;
    DigestInput input;
    Bytes extra_storage; // keeps descriptor bytes alive for `input.extra`
    std::string origin;
};

const Bytes& resolved(const std::optional<Bytes>& bytes, const std::string& path) {
    if (!bytes)
        throw UnresolvedBinary("trace did not resolve binary for path: " + path);
    return *bytes;
}

EventView view_of(const DeviceEvent& ev) {
    EventView v;
    if (const auto* ex = std::get_if<ExecEvent>(&ev.payload)) {
        v.event_class = EventClass::Exec;
        v.kind = EntryKind::ExecProgram;
        v.input = {EntryKind::ExecProgram, ByteView(resolved(ex->program_bytes, ex->path)),
                   ex->path, {}};
        v.origin = ex->path;
    } else if (const auto* k = std::get_if<KillEvent>(&ev.payload)) {
        v.event_class = EventClass::Kill;
        v.kind = EntryKind::Signal;
        v.extra_storage = signal_descriptor(k->sender_path, k->signal, k->target_path);
        v.input = {EntryKind::Signal, {}, k->sender_path, ByteView(v.extra_storage)};
        v.origin = k->sender_path + " -> " + std::to_string(k->signal) + " -> " +
                   k->target_path;
    } else if (const auto* im = std::get_if<InsertModuleEvent>(&ev.payload)) {
        v.event_class = EventClass::Insmod;
        v.kind = EntryKind::ModuleInsert;
        v.input = {EntryKind::ModuleInsert,
                   ByteView(resolved(im->insmod_bytes, im->insmod_path)), im->insmod_path,
                   ByteView(im->lkm_bytes)};
        v.origin = im->insmod_path + " " + im->lkm_name;
    } else if (const auto* rm = std::get_if<RemoveModuleEvent>(&ev.payload)) {
        v.event_class = EventClass::Rmmod;
        v.kind = EntryKind::ModuleRemove;
        v.extra_storage = to_bytes(rm->lkm_name);
        v.input = {EntryKind::ModuleRemove,
                   ByteView(resolved(rm->rmmod_bytes, rm->rmmod_path)), rm->rmmod_path,
                   ByteView(v.extra_storage)};
        v.origin = rm->rmmod_path + " " + rm->lkm_name;
    } else {
        throw Error("unhandled event payload");
    }
    return v;
}

} // namespace

Engine::Outcome Engine::handle_event(const DeviceEvent& ev, FileMap& fs) {
    last_event_t_ms_ = ev.t_ms;
    last_seq_ = ev.seq;
    ++events_processed_;

    if (std::holds_alternative<RebootEvent>(ev.payload)) {
        // Protected files are rewritten from the shadow copies regardless of
        // whether (or how) they were modified; the mode is part of the
        // persisted state and survives the reboot.
        for (const auto& [path, bytes] : shadow_files_) fs[path] = bytes;
        Decision d{ev.seq, EventClass::Reboot, true, DenyCode::None, DecisionReason::Reboot,
                   EntryId{}};
        return {d, std::nullopt};
    }

    EventView v = view_of(ev);
    EntryId id = compute_entry_id(v.input);
    Decision d{ev.seq, v.event_class, true, DenyCode::None, DecisionReason::Whitelisted, id};

    switch (mode_) {
    case Mode::Profiling:
        if (whitelist_.insert(id, EntryMeta{v.kind, v.origin, ev.seq})) {
            quiet_since_ms_ = ev.t_ms;
            d.reason = DecisionReason::Profiled;
        }
        return {d, std::nullopt};
    case Mode::Stopped:
        d.reason = DecisionReason::ProtectionOff;
        return {d, std::nullopt};
    case Mode::Enforcing:
        if (whitelist_.contains(id)) return {d, std::nullopt};
        d.allowed = false;
        d.code = v.event_class == EventClass::Kill ? DenyCode::PermissionDenied
                                                   : DenyCode::NotImplemented;
        d.reason = DecisionReason::NotWhitelisted;
        return {d, Report{ev.seq, id, v.kind, d.code, v.origin}};
    }
    throw Error("unreachable mode");
}

bool Engine::profiling_complete(std::uint64_t now_ms) const {
    if (mode_ != Mode::Profiling)
        throw WrongMode(std::string("profiling_complete queried in mode ") +
                        mode_name(mode_));
    return now_ms >= quiet_since_ms_ && now_ms - quiet_since_ms_ >= cfg_.quiet_period_ms;
}

void Engine::apply_command(const Command& cmd) {
    switch (cmd.code) {
    case CommandCode::Stop:
        if (mode_ != Mode::Stopped) resume_mode_ = mode_;
        mode_ = Mode::Stopped;
        return;
    case CommandCode::Start:
        set_mode(resume_mode_);
        return;
    case CommandCode::Profile:
        set_mode(Mode::Profiling);
        return;
    case CommandCode::Protect:
        set_mode(Mode::Enforcing);
        return;
    case CommandCode::AddEntry:
        whitelist_.insert(cmd.entry_id,
                          EntryMeta{cmd.entry_kind,
                                    cmd.label.empty() ? "(remote)" : cmd.label, last_seq_});
        return;
    case CommandCode::RemoveEntry:
        whitelist_.remove(cmd.entry_id);
        return;
    }
    throw Error("unknown command code");
}

} // namespace hades
