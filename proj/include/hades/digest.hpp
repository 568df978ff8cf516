#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "hades/bytes.hpp"
#include "hades/error.hpp"
#include "hades/sha256.hpp"

// Context-sensitive whitelist identifiers. An entry identifier commits to the
// event kind, the program bytes, the invoked path (verbatim, symlinks are not
// resolved), and kind-specific context. All fields are length-prefixed so the
// concatenation is injective.
namespace hades {

enum class EntryKind : std::uint8_t {
    ExecProgram = 0,  // process execution
    ModuleInsert = 1, // kernel module load; extra = module image bytes
    ModuleRemove = 2, // kernel module unload; extra = module name
    Signal = 3,       // signal delivery; extra = signal descriptor
};

// Short names used in the whitelist file format and logs.
const char* entry_kind_name(EntryKind k); // "exec" | "insmod" | "rmmod" | "signal"
std::optional<EntryKind> entry_kind_from_name(std::string_view name);

using EntryId = std::array<std::uint8_t, 32>;

std::string entry_id_hex(const EntryId& id);
EntryId entry_id_from_hex(std::string_view hex); // throws ParseError

class MissingContext : public Error {
public:
    using Error::Error;
};

class InvalidPath : public Error {
public:
    using Error::Error;
};

class InvalidSignal : public Error {
public:
    using Error::Error;
};

struct DigestInput {
    EntryKind kind = EntryKind::ExecProgram;
    ByteView program_bytes{};       // may be empty (degenerate file)
    std::string_view program_path{};
    std::optional<ByteView> extra{}; // required iff kind != ExecProgram
};

// Digest over: kind_tag(u8) || lp64(program_bytes) || lp64(path) || lp64(extra
// or empty). Throws InvalidPath (empty or non-UTF-8 path), MissingContext.
EntryId compute_entry_id(const DigestInput& in);

// Canonical encoding of a signal authorization key:
// lp64(sender_path) || signal(u8) || lp64(target_path).
// Throws InvalidSignal (signal outside [1,64]), InvalidPath (empty path).
Bytes signal_descriptor(std::string_view sender_path, int signal_number,
                        std::string_view target_path);

struct SignalKey {
    std::string sender_path;
    int signal_number = 0;
    std::string target_path;

    bool operator==(const SignalKey&) const = default;
};

SignalKey parse_signal_descriptor(ByteView descriptor); // throws ParseError

bool is_valid_utf8(std::string_view s);

} // namespace hades
