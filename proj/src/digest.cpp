#include "hades/digest.hpp"

namespace hades {

const char* entry_kind_name(EntryKind k) {
    switch (k) {
    case EntryKind::ExecProgram: return "exec";
    case EntryKind::ModuleInsert: return "insmod";
    case EntryKind::ModuleRemove: return "rmmod";
    case EntryKind::Signal: return "signal";
    }
    return "?";
}

std::optional<EntryKind> entry_kind_from_name(std::string_view name) {
    if (name == "exec") return EntryKind::ExecProgram;
    if (name == "insmod") return EntryKind::ModuleInsert;
    if (name == "rmmod") return EntryKind::ModuleRemove;
    if (name == "signal") return EntryKind::Signal;
    return std::nullopt;
}

std::string entry_id_hex(const EntryId& id) {
    return to_hex(ByteView(id));
}

EntryId entry_id_from_hex(std::string_view hex) {
    Bytes raw = from_hex(hex);
    if (raw.size() != 32) throw ParseError("entry id must be 64 hex chars");
    EntryId id{};
    std::copy(raw.begin(), raw.end(), id.begin());
    return id;
}

bool is_valid_utf8(std::string_view s) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
    std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
        std::uint8_t b = p[i];
        if (b < 0x80) {
            ++i;
            continue;
        }
        std::size_t len;
        std::uint32_t cp;
        if ((b & 0xe0) == 0xc0) {
            len = 2;
            cp = b & 0x1f;
        } else if ((b & 0xf0) == 0xe0) {
            len = 3;
            cp = b & 0x0f;
        } else if ((b & 0xf8) == 0xf0) {
            len = 4;
            cp = b & 0x07;
        } else {
            return false; // stray continuation byte or 0xf8+ lead
        }
        if (i + len > n) return false;
        for (std::size_t j = 1; j < len; ++j) {
            if ((p[i + j] & 0xc0) != 0x80) return false;
            cp = (cp << 6) | (p[i + j] & 0x3f);
        }
        // Reject overlong forms, surrogates, and out-of-range code points.
        static constexpr std::uint32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < kMin[len]) return false;
        if (cp >= 0xd800 && cp <= 0xdfff) return false;
        if (cp > 0x10ffff) return false;
        i += len;
    }
    return true;
}

EntryId compute_entry_id(const DigestInput& in) {
    if (in.program_path.empty()) throw InvalidPath("program path must be non-empty");
    if (!is_valid_utf8(in.program_path)) throw InvalidPath("program path is not valid UTF-8");
    if (in.kind != EntryKind::ExecProgram && !in.extra.has_value())
        throw MissingContext(std::string("context bytes required for ") +
                             entry_kind_name(in.kind) + " entries");

    sha256::Hasher h;
    const std::uint8_t tag = static_cast<std::uint8_t>(in.kind);
    h.update(ByteView(&tag, 1));
    auto put_field = [&h](ByteView field) {
        std::uint8_t len[8];
        std::uint64_t n = field.size();
        for (int s = 0; s < 8; ++s) len[s] = static_cast<std::uint8_t>(n >> (56 - 8 * s));
        h.update(ByteView(len, 8));
        h.update(field);
    };
    put_field(in.program_bytes);
    put_field(as_bytes(in.program_path));
    put_field(in.extra.value_or(ByteView{}));
    return h.finish();
}

Bytes signal_descriptor(std::string_view sender_path, int signal_number,
                        std::string_view target_path) {
    if (signal_number < 1 || signal_number > 64)
        throw InvalidSignal("signal number " + std::to_string(signal_number) +
                            " outside [1,64]");
    if (sender_path.empty() || target_path.empty())
        throw InvalidPath("signal descriptor paths must be non-empty");
    Bytes out;
    put_lp64(out, as_bytes(sender_path));
    put_u8(out, static_cast<std::uint8_t>(signal_number));
    put_lp64(out, as_bytes(target_path));
    return out;
}

SignalKey parse_signal_descriptor(ByteView descriptor) {
    ByteReader r{descriptor};
    SignalKey key;
    auto sender = r.lp64();
    key.sender_path.assign(sender.begin(), sender.end());
    key.signal_number = r.u8();
    auto target = r.lp64();
    key.target_path.assign(target.begin(), target.end());
    r.expect_done();
    if (key.signal_number < 1 || key.signal_number > 64)
        throw ParseError("signal descriptor carries out-of-range signal");
    return key;
}

} // namespace hades
