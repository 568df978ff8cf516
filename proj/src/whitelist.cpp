#include "hades/whitelist.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hades {

namespace {
constexpr const char* kHeader = "HADESWL v1";
}

bool Whitelist::insert(const EntryId& id, EntryMeta meta) {
    return entries_.try_emplace(id, std::move(meta)).second;
}

const EntryMeta* Whitelist::find(const EntryId& id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::pair<EntryId, EntryMeta>> Whitelist::sorted_entries() const {
    std::vector<std::pair<EntryId, EntryMeta>> out(entries_.begin(), entries_.end());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

void Whitelist::save(std::ostream& out) const {
    out << kHeader << '\n';
    for (const auto& [id, meta] : sorted_entries()) {
        out << entry_kind_name(meta.kind) << ' ' << entry_id_hex(id) << ' ' << meta.added_at
            << ' ' << meta.label << '\n';
    }
}

void Whitelist::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open whitelist file for writing: " + path);
    save(out);
    out.flush();
    if (!out) throw Error("short write to whitelist file: " + path);
}

Whitelist Whitelist::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kHeader)
        throw FormatError("whitelist header mismatch, expected \"" + std::string(kHeader) +
                          "\"");
    Whitelist wl;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto corrupt = [lineno](const std::string& why) {
            return CorruptEntry("whitelist line " + std::to_string(lineno) + ": " + why);
        };
        std::istringstream fields(line);
        std::string kind_name, hex, added_at_text;
        if (!(fields >> kind_name >> hex >> added_at_text)) throw corrupt("too few fields");
        auto kind = entry_kind_from_name(kind_name);
        if (!kind) throw corrupt("unknown entry kind \"" + kind_name + "\"");
        EntryId id;
        try {
            id = entry_id_from_hex(hex);
        } catch (const ParseError& e) {
            throw corrupt(e.what());
        }
        std::uint64_t added_at = 0;
        try {
            std::size_t used = 0;
            added_at = std::stoull(added_at_text, &used);
            if (used != added_at_text.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw corrupt("bad sequence number \"" + added_at_text + "\"");
        }
        std::string label;
        std::getline(fields, label);
        if (!label.empty() && label.front() == ' ') label.erase(0, 1);
        if (label.empty()) throw corrupt("empty label");
        if (!wl.insert(id, EntryMeta{*kind, label, added_at}))
            throw corrupt("duplicate entry id " + hex);
    }
    return wl;
}

Whitelist Whitelist::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open whitelist file: " + path);
    return load(in);
}

} // namespace hades
