#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hades/error.hpp"

namespace hades {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex); // throws ParseError

std::string base64_encode(ByteView data);
Bytes base64_decode(std::string_view text); // throws ParseError

// Big-endian append helpers for the canonical encodings.
inline void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

inline void put_u16be(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32be(Bytes& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline void put_u64be(Bytes& out, std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline void put_bytes(Bytes& out, ByteView data) {
    out.insert(out.end(), data.begin(), data.end());
}

// u64be length prefix followed by the raw bytes.
inline void put_lp64(Bytes& out, ByteView field) {
    put_u64be(out, field.size());
    put_bytes(out, field);
}

// u32be length prefix followed by the raw bytes (wire protocol fields).
inline void put_lp32(Bytes& out, ByteView field) {
    put_u32be(out, static_cast<std::uint32_t>(field.size()));
    put_bytes(out, field);
}

// Bounds-checked sequential reader; throws ParseError when input runs out.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

    std::uint8_t u8() { return take(1)[0]; }

    std::uint16_t u16be() {
        auto b = take(2);
        return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
    }

    std::uint32_t u32be() {
        auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | b[i];
        return v;
    }

    std::uint64_t u64be() {
        auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | b[i];
        return v;
    }

    ByteView bytes(std::size_t n) { return take(n); }

    // u32be length prefix followed by that many bytes.
    ByteView lp32() {
        std::uint32_t n = u32be();
        return take(n);
    }

    // u64be length prefix followed by that many bytes.
    ByteView lp64() {
        std::uint64_t n = u64be();
        if (n > remaining()) throw ParseError("length prefix exceeds input");
        return take(static_cast<std::size_t>(n));
    }

    void expect_done() const {
        if (!done()) throw ParseError("trailing bytes after payload");
    }

private:
    ByteView take(std::size_t n) {
        if (n > remaining()) throw ParseError("truncated input");
        ByteView v = data_.subspan(pos_, n);
        pos_ += n;
        return v;
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

} // namespace hades
