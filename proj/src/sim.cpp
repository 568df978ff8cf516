#include "hades/sim.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

namespace hades::sim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class E>
std::string read_file(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw E(std::string(what) + " not readable: " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// ---------------------------------------------------------------------------
// TOML-subset reader shared by manifests and scenario files.

using TomlScalar =
    std::variant<std::string, std::int64_t, std::vector<std::string>, std::vector<std::int64_t>>;

struct TomlDoc {
    // section -> (key -> value); the top level lives under "".
    std::map<std::string, std::vector<std::pair<std::string, TomlScalar>>> sections;
};

[[noreturn]] void fail_line(const char* what, std::size_t line_no, const std::string& msg) {
    throw ManifestError(std::string(what) + " line " + std::to_string(line_no) + ": " + msg);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

// Parses one scalar: "string", integer, or a [list] of either.
TomlScalar parse_scalar(const char* what, std::size_t line_no, std::string_view v) {
    v = trim(v);
    if (v.empty()) fail_line(what, line_no, "missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') fail_line(what, line_no, "unterminated string");
        std::string_view body = v.substr(1, v.size() - 2);
        if (body.find('"') != std::string_view::npos)
            fail_line(what, line_no, "embedded quote in string");
        return std::string(body);
    }
    if (v.front() == '[') {
        if (v.back() != ']') fail_line(what, line_no, "unterminated array");
        std::string_view body = trim(v.substr(1, v.size() - 2));
        std::vector<std::string> strings;
        std::vector<std::int64_t> ints;
        bool any_string = false, any_int = false;
        while (!body.empty()) {
            std::size_t comma = body.find(',');
            std::string_view item = trim(body.substr(0, comma));
            if (item.empty()) fail_line(what, line_no, "empty array element");
            TomlScalar s = parse_scalar(what, line_no, item);
            if (auto* str = std::get_if<std::string>(&s)) {
                strings.push_back(*str);
                any_string = true;
            } else if (auto* i = std::get_if<std::int64_t>(&s)) {
                ints.push_back(*i);
                any_int = true;
            } else {
                fail_line(what, line_no, "nested arrays are not supported");
            }
            if (comma == std::string_view::npos) break;
            body = trim(body.substr(comma + 1));
        }
        if (any_string && any_int) fail_line(what, line_no, "mixed array element types");
        if (any_string) return strings;
        return ints; // also the empty-array case
    }
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
    if (ec != std::errc() || ptr != v.data() + v.size())
        fail_line(what, line_no, "expected string, integer, or array");
    return value;
}

TomlDoc parse_toml(const char* what, const std::string& text) {
    TomlDoc doc;
    std::string section;
    doc.sections[section];
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail_line(what, line_no, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) fail_line(what, line_no, "empty section name");
            doc.sections[section];
            continue;
        }
        // key = value; the key is a bare word or a quoted string (file paths).
        std::string key;
        std::string_view rest;
        if (line.front() == '"') {
            std::size_t close = line.find('"', 1);
            if (close == std::string_view::npos) fail_line(what, line_no, "unterminated key");
            key = std::string(line.substr(1, close - 1));
            rest = trim(line.substr(close + 1));
        } else {
            std::size_t eq = line.find('=');
            if (eq == std::string_view::npos) fail_line(what, line_no, "expected key = value");
            key = std::string(trim(line.substr(0, eq)));
            rest = line.substr(eq);
        }
        if (key.empty()) fail_line(what, line_no, "empty key");
        if (rest.empty() || rest.front() != '=')
            fail_line(what, line_no, "expected '=' after key");
        // A '#' after the value would start a comment; forbid it instead of
        // guessing whether it sits inside a string.
        std::string_view value = trim(rest.substr(1));
        if (value.find('#') != std::string_view::npos && value.front() != '"')
            value = trim(value.substr(0, value.find('#')));
        doc.sections[section].emplace_back(key, parse_scalar(what, line_no, value));
    }
    return doc;
}

// Typed lookups with "which file, which key" error messages.
struct SectionView {
    const char* what;
    const std::string* name;
    const std::vector<std::pair<std::string, TomlScalar>>* entries;

    const TomlScalar* find(const std::string& key) const {
        for (const auto& [k, v] : *entries)
            if (k == key) return &v;
        return nullptr;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        std::string where = name->empty() ? std::string("top level") : "[" + *name + "]";
        throw ManifestError(std::string(what) + " " + where + ": " + msg);
    }

    std::string get_string(const std::string& key) const {
        const TomlScalar* v = find(key);
        if (!v) fail("missing required key '" + key + "'");
        if (const auto* s = std::get_if<std::string>(v)) return *s;
        fail("key '" + key + "' must be a string");
    }

    std::int64_t get_int(const std::string& key) const {
        const TomlScalar* v = find(key);
        if (!v) fail("missing required key '" + key + "'");
        if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
        fail("key '" + key + "' must be an integer");
    }

    std::vector<std::string> get_strings(const std::string& key) const {
        const TomlScalar* v = find(key);
        if (!v) fail("missing required key '" + key + "'");
        if (const auto* a = std::get_if<std::vector<std::string>>(v)) return *a;
        if (const auto* e = std::get_if<std::vector<std::int64_t>>(v); e && e->empty()) return {};
        fail("key '" + key + "' must be an array of strings");
    }

    std::vector<std::int64_t> get_ints(const std::string& key) const {
        const TomlScalar* v = find(key);
        if (!v) fail("missing required key '" + key + "'");
        if (const auto* a = std::get_if<std::vector<std::int64_t>>(v)) return *a;
        if (const auto* e = std::get_if<std::vector<std::string>>(v); e && e->empty()) return {};
        fail("key '" + key + "' must be an array of integers");
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        for (const auto& [k, v] : *entries) {
            (void)v;
            if (std::find_if(keys.begin(), keys.end(),
                             [&](const char* a) { return k == a; }) == keys.end())
                fail("unknown key '" + k + "'");
        }
    }
};

SectionView section(const char* what, const TomlDoc& doc, const std::string& name,
                    bool required) {
    static const std::vector<std::pair<std::string, TomlScalar>> kEmpty;
    auto it = doc.sections.find(name);
    if (it == doc.sections.end()) {
        if (required)
            throw ManifestError(std::string(what) + ": missing required section [" + name + "]");
        return SectionView{what, &name, &kEmpty};
    }
    return SectionView{what, &it->first, &it->second};
}

void allow_sections(const char* what, const TomlDoc& doc,
                    std::initializer_list<const char*> names) {
    for (const auto& [name, entries] : doc.sections) {
        (void)entries;
        if (std::find_if(names.begin(), names.end(),
                         [&](const char* a) { return name == a; }) == names.end())
            throw ManifestError(std::string(what) + ": unknown section [" + name + "]");
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Manifests

DeviceImage parse_manifest(const std::string& text, const fs::path& blob_dir) {
    const char* what = "manifest";
    TomlDoc doc = parse_toml(what, text);
    allow_sections(what, doc, {"", "boot", "files"});

    DeviceImage img;
    SectionView top = section(what, doc, "", true);
    top.allow_only({"name", "engine_binary", "init_script"});
    img.name = top.get_string("name");
    img.engine_binary = top.get_string("engine_binary");
    img.init_script = top.get_string("init_script");

    SectionView boot = section(what, doc, "boot", false);
    boot.allow_only({"exec"});
    if (boot.find("exec")) img.boot_exec = boot.get_strings("exec");

    SectionView files = section(what, doc, "files", true);
    for (const auto& [path, value] : *files.entries) {
        const auto* blob_rel = std::get_if<std::string>(&value);
        if (!blob_rel) files.fail("file entry '" + path + "' must map to a blob path string");
        if (path.empty() || path.front() != '/')
            files.fail("file path '" + path + "' must be absolute");
        if (img.files.count(path)) files.fail("duplicate file path '" + path + "'");
        fs::path blob = blob_dir / *blob_rel;
        std::string content = read_file<ManifestError>(blob, "manifest blob");
        img.files[path] = Bytes(content.begin(), content.end());
    }

    for (const std::string* p : {&img.engine_binary, &img.init_script})
        if (!img.files.count(*p))
            throw ManifestError("manifest: protected path " + *p + " has no file entry");
    for (const std::string& p : img.boot_exec)
        if (!img.files.count(p))
            throw ManifestError("manifest: boot exec path " + p + " has no file entry");
    return img;
}

DeviceImage load_manifest(const fs::path& manifest_path) {
    return parse_manifest(read_file<ManifestError>(manifest_path, "manifest"), manifest_path.parent_path());
}

// ---------------------------------------------------------------------------
// Traces

namespace {

[[noreturn]] void fail_trace(std::size_t line_no, const std::string& msg) {
    throw TraceError("trace line " + std::to_string(line_no) + ": " + msg);
}

void require_fields(std::size_t line_no, const json& j,
                    std::initializer_list<const char*> required,
                    std::initializer_list<const char*> optional) {
    auto known = [&](const std::string& k) {
        for (const char* r : required)
            if (k == r) return true;
        for (const char* o : optional)
            if (k == o) return true;
        return false;
    };
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known(key)) fail_trace(line_no, "unexpected field '" + key + "'");
    }
    for (const char* r : required)
        if (!j.contains(r)) fail_trace(line_no, std::string("missing field '") + r + "'");
}

std::string get_str(std::size_t line_no, const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_string()) fail_trace(line_no, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::string module_stem(const std::string& module_path) {
    return fs::path(module_path).stem().string();
}

} // namespace

std::vector<TraceRecord> parse_trace(const std::string& text) {
    std::vector<TraceRecord> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::uint64_t prev_t = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        json j;
        try {
            j = json::parse(sv);
        } catch (const json::parse_error& e) {
            fail_trace(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) fail_trace(line_no, "record must be a JSON object");
        if (!j.contains("t") || !j.at("t").is_number_unsigned())
            fail_trace(line_no, "field 't' must be a non-negative integer");
        if (!j.contains("kind")) fail_trace(line_no, "missing field 'kind'");

        TraceRecord rec;
        rec.t_ms = j.at("t").get<std::uint64_t>();
        if (!out.empty() && rec.t_ms < prev_t) fail_trace(line_no, "timestamp decreases");
        prev_t = rec.t_ms;

        std::string kind = get_str(line_no, j, "kind");
        if (kind == "exec") {
            require_fields(line_no, j, {"t", "kind", "path"}, {"args"});
            rec.kind = RecordKind::Exec;
            rec.path = get_str(line_no, j, "path");
            if (j.contains("args")) {
                if (!j.at("args").is_array())
                    fail_trace(line_no, "field 'args' must be an array of strings");
                for (const auto& a : j.at("args")) {
                    if (!a.is_string())
                        fail_trace(line_no, "field 'args' must be an array of strings");
                    rec.args.push_back(a.get<std::string>());
                }
            }
        } else if (kind == "kill") {
            require_fields(line_no, j, {"t", "kind", "sender", "signal", "target"}, {});
            rec.kind = RecordKind::Kill;
            rec.sender = get_str(line_no, j, "sender");
            rec.target = get_str(line_no, j, "target");
            if (!j.at("signal").is_number_integer())
                fail_trace(line_no, "field 'signal' must be an integer");
            rec.signal = j.at("signal").get<int>();
            if (rec.signal < 1 || rec.signal > 64)
                fail_trace(line_no, "signal out of range 1..64");
        } else if (kind == "insmod") {
            require_fields(line_no, j, {"t", "kind", "path", "module"}, {"lkm_name"});
            rec.kind = RecordKind::Insmod;
            rec.path = get_str(line_no, j, "path");
            rec.module = get_str(line_no, j, "module");
            rec.lkm_name =
                j.contains("lkm_name") ? get_str(line_no, j, "lkm_name") : module_stem(rec.module);
            if (rec.lkm_name.empty()) fail_trace(line_no, "empty module name");
        } else if (kind == "rmmod") {
            require_fields(line_no, j, {"t", "kind", "path", "lkm_name"}, {});
            rec.kind = RecordKind::Rmmod;
            rec.path = get_str(line_no, j, "path");
            rec.lkm_name = get_str(line_no, j, "lkm_name");
            if (rec.lkm_name.empty()) fail_trace(line_no, "empty module name");
        } else if (kind == "reboot") {
            require_fields(line_no, j, {"t", "kind"}, {});
            rec.kind = RecordKind::Reboot;
        } else if (kind == "write") {
            require_fields(line_no, j, {"t", "kind", "path"}, {"data", "data_b64"});
            rec.kind = RecordKind::Write;
            rec.path = get_str(line_no, j, "path");
            if (j.contains("data") == j.contains("data_b64"))
                fail_trace(line_no, "write needs exactly one of 'data' or 'data_b64'");
            if (j.contains("data")) {
                std::string s = get_str(line_no, j, "data");
                rec.data = Bytes(s.begin(), s.end());
            } else {
                try {
                    rec.data = base64_decode(get_str(line_no, j, "data_b64"));
                } catch (const ParseError& e) {
                    fail_trace(line_no, std::string("bad data_b64: ") + e.what());
                }
            }
        } else if (kind == "rm") {
            require_fields(line_no, j, {"t", "kind", "path"}, {});
            rec.kind = RecordKind::Rm;
            rec.path = get_str(line_no, j, "path");
        } else {
            fail_trace(line_no, "unknown record kind '" + kind + "'");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<TraceRecord> load_trace(const fs::path& trace_path) {
    try {
        return parse_trace(read_file<TraceError>(trace_path, "trace"));
    } catch (const TraceError& e) {
        throw TraceError(trace_path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Replay

std::uint64_t drive(const DeviceImage& image, FileMap& fs_map,
                    const std::vector<TraceRecord>& trace, std::uint64_t first_seq,
                    std::uint64_t t_offset, const std::function<void(const DeviceEvent&)>& sink) {
    std::uint64_t seq = first_seq;
    auto resolve = [&](const std::string& path, const char* what) -> Bytes {
        auto it = fs_map.find(path);
        if (it == fs_map.end())
            throw TraceResolutionError(std::string(what) + " path not in filesystem: " + path);
        return it->second;
    };
    auto emit = [&](std::uint64_t t, EventPayload payload) {
        sink(DeviceEvent{seq++, t + t_offset, std::move(payload)});
    };
    for (const TraceRecord& rec : trace) {
        switch (rec.kind) {
        case RecordKind::Exec:
            emit(rec.t_ms, ExecEvent{rec.path, rec.args, resolve(rec.path, "exec")});
            break;
        case RecordKind::Kill:
            emit(rec.t_ms, KillEvent{rec.sender, rec.signal, rec.target});
            break;
        case RecordKind::Insmod:
            emit(rec.t_ms, InsertModuleEvent{rec.path, resolve(rec.path, "insmod"),
                                             resolve(rec.module, "module"), rec.lkm_name});
            break;
        case RecordKind::Rmmod:
            emit(rec.t_ms, RemoveModuleEvent{rec.path, resolve(rec.path, "rmmod"), rec.lkm_name});
            break;
        case RecordKind::Reboot:
            emit(rec.t_ms, RebootEvent{});
            // The engine restored its protected files before these resolve.
            for (const std::string& p : image.boot_exec)
                emit(rec.t_ms, ExecEvent{p, {}, resolve(p, "boot exec")});
            break;
        case RecordKind::Write:
            fs_map[rec.path] = rec.data;
            break;
        case RecordKind::Rm:
            fs_map.erase(rec.path);
            break;
        }
    }
    return seq;
}

ReplayResult replay(Engine& engine, FileMap& fs_map, const DeviceImage& image,
                    const std::vector<TraceRecord>& trace, std::uint64_t first_seq,
                    std::uint64_t t_offset) {
    ReplayResult res;
    res.next_seq =
        drive(image, fs_map, trace, first_seq, t_offset, [&](const DeviceEvent& ev) {
            Engine::Outcome out = engine.handle_event(ev, fs_map);
            res.decisions.push_back(out.decision);
            if (out.report) res.reports.push_back(*out.report);
        });
    return res;
}

std::string render_decision_log(const std::vector<Decision>& decisions) {
    std::string out;
    for (const Decision& d : decisions) {
        out += decision_line(d);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scenarios

Scenario load_scenario(const fs::path& expect_path) {
    if (!fs::exists(expect_path))
        throw UnknownScenario("no such scenario file: " + expect_path.string());
    const char* what = "scenario";
    TomlDoc doc = parse_toml(what, read_file<ManifestError>(expect_path, what));
    allow_sections(what, doc, {""});
    SectionView top = section(what, doc, "", true);
    top.allow_only({"description", "manifest", "profile_trace", "attack_trace",
                    "expected_first_denial", "expected_denials"});

    Scenario sc;
    sc.name = expect_path.stem().string();
    sc.description = top.get_string("description");
    fs::path base = expect_path.parent_path();
    sc.manifest = base / top.get_string("manifest");
    sc.profile_trace = base / top.get_string("profile_trace");
    sc.attack_trace = base / top.get_string("attack_trace");
    std::int64_t first = top.get_int("expected_first_denial");
    if (first <= 0) top.fail("expected_first_denial must be positive");
    sc.expected_first_denial = static_cast<std::uint64_t>(first);
    for (std::int64_t s : top.get_ints("expected_denials")) {
        if (s <= 0) top.fail("expected_denials entries must be positive");
        sc.expected_denials.push_back(static_cast<std::uint64_t>(s));
    }
    return sc;
}

ScenarioRun run_scenario(const Scenario& sc) {
    auto t0 = std::chrono::steady_clock::now();
    DeviceImage img = load_manifest(sc.manifest);
    std::vector<TraceRecord> profile_trace = load_trace(sc.profile_trace);
    std::vector<TraceRecord> attack_trace = load_trace(sc.attack_trace);

    EngineConfig ecfg;
    ecfg.engine_binary_path = img.engine_binary;
    ecfg.init_script_path = img.init_script;

    ScenarioRun run;
    run.scenario = sc;

    // Phase 1: profile the benign trace on a pristine image.
    FileMap profile_fs = img.files;
    Engine profiler = Engine::bootstrap(profile_fs, ecfg);
    replay(profiler, profile_fs, img, profile_trace);
    std::uint64_t end_t = profile_trace.empty() ? 0 : profile_trace.back().t_ms;
    run.profiling_completed = profiler.profiling_complete(end_t + ecfg.quiet_period_ms);
    run.whitelist_size = profiler.whitelist().size();

    // Phase 2: fresh device, learned whitelist, enforcing.
    FileMap attack_fs = img.files;
    Engine enforcer = Engine::bootstrap(attack_fs, ecfg);
    enforcer.set_whitelist(profiler.whitelist());
    enforcer.set_mode(Mode::Enforcing);
    ReplayResult res = replay(enforcer, attack_fs, img, attack_trace);
    run.attack_decisions = std::move(res.decisions);
    run.attack_reports = std::move(res.reports);
    for (const Decision& d : run.attack_decisions)
        if (!d.allowed) run.denied_seqs.push_back(d.seq);

    run.detected =
        !run.denied_seqs.empty() && run.denied_seqs.front() <= sc.expected_first_denial;
    run.denials_match = run.denied_seqs == sc.expected_denials;
    run.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

ScenarioRun run_scenario(const fs::path& expect_path) {
    return run_scenario(load_scenario(expect_path));
}

std::vector<fs::path> find_scenarios(const fs::path& fixtures_root) {
    std::vector<fs::path> out;
    if (!fs::is_directory(fixtures_root)) return out;
    for (const auto& device : fs::directory_iterator(fixtures_root)) {
        fs::path dir = device.path() / "scenarios";
        if (!fs::is_directory(dir)) continue;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".expect") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

ProfileExperiment profile_experiment(const fs::path& manifest_path, const fs::path& trace_path,
                                     const std::vector<unsigned>& multipliers) {
    DeviceImage img = load_manifest(manifest_path);
    std::vector<TraceRecord> trace = load_trace(trace_path);
    std::uint64_t span = (trace.empty() ? 0 : trace.back().t_ms) + 1000;

    EngineConfig ecfg;
    ecfg.engine_binary_path = img.engine_binary;
    ecfg.init_script_path = img.init_script;

    ProfileExperiment exp;
    Whitelist learned;
    for (unsigned m : multipliers) {
        FileMap fs_map = img.files;
        Engine eng = Engine::bootstrap(fs_map, ecfg);
        std::uint64_t seq = 1;
        for (unsigned pass = 0; pass < m; ++pass)
            seq = replay(eng, fs_map, img, trace, seq, pass * span).next_seq;
        exp.whitelist_sizes.push_back(eng.whitelist().size());
        if (m == multipliers.front()) learned = eng.whitelist();
    }
    exp.identical = std::all_of(exp.whitelist_sizes.begin(), exp.whitelist_sizes.end(),
                                [&](std::size_t s) { return s == exp.whitelist_sizes.front(); });

    FileMap fs_map = img.files;
    Engine eng = Engine::bootstrap(fs_map, ecfg);
    eng.set_whitelist(std::move(learned));
    eng.set_mode(Mode::Enforcing);
    ReplayResult res = replay(eng, fs_map, img, trace);
    for (const Decision& d : res.decisions)
        if (!d.allowed) ++exp.enforce_denials;
    return exp;
}

} // namespace hades::sim
