#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hades/digest.hpp"
#include "hades/error.hpp"

namespace hades {

class FormatError : public Error {
public:
    using Error::Error;
};

class CorruptEntry : public Error {
public:
    using Error::Error;
};

struct EntryMeta {
    EntryKind kind = EntryKind::ExecProgram;
    std::string label;           // human-readable origin, non-empty
    std::uint64_t added_at = 0;  // logical event sequence number

    bool operator==(const EntryMeta&) const = default;
};

// Hash-keyed set of entry identifiers with per-entry metadata. Lookup cost is
// independent of entry count. Entry ids are SHA-256 outputs, so their leading
// bytes are already uniformly distributed and serve directly as the bucket hash.
class Whitelist {
public:
    // Returns true when the id was new. Re-inserting an existing id is a no-op
    // (the first meta wins) and returns false.
    bool insert(const EntryId& id, EntryMeta meta);

    bool contains(const EntryId& id) const { return entries_.count(id) != 0; }

    // Returns false (no-op) when the id is absent.
    bool remove(const EntryId& id) { return entries_.erase(id) != 0; }

    const EntryMeta* find(const EntryId& id) const;

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    // Entries ordered by id, for deterministic serialization and reporting.
    std::vector<std::pair<EntryId, EntryMeta>> sorted_entries() const;

    // Text format: header line "HADESWL v1", then per entry
    //   <kind> <64-hex id> <added-at> <label to end of line>
    // sorted by hex id. Throws FormatError (header) or CorruptEntry (line
    // number included) on malformed input.
    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static Whitelist load(std::istream& in);
    static Whitelist load_file(const std::string& path);

    bool operator==(const Whitelist& other) const { return entries_ == other.entries_; }

private:
    struct IdHash {
        std::size_t operator()(const EntryId& id) const {
            std::size_t h = 0;
            for (int i = 0; i < 8; ++i) h = (h << 8) | id[i];
            return h;
        }
    };

    std::unordered_map<EntryId, EntryMeta, IdHash> entries_;
};

} // namespace hades
