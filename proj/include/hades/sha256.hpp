#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "hades/bytes.hpp"

// SHA-256 with runtime-dispatched kernels. The scalar kernel is the reference;
// on x86-64 a SHA-NI single-stream kernel and an AVX2 8-way multi-buffer kernel
// are selected when the CPU supports them. All kernels are equivalence-tested
// against the scalar path.
namespace hades::sha256 {

using Digest = std::array<std::uint8_t, 32>;

enum class Kernel {
    Auto,   // best available
    Scalar, // portable reference, always available
    ShaNi,  // x86 SHA extensions, single stream
    Avx2,   // 8-way multi-buffer transform for digest_batch
};

bool kernel_available(Kernel k);
// Forces the dispatch choice; Auto restores CPU-based selection.
void set_kernel(Kernel k);
// Resolved kernels after dispatch (never Auto).
Kernel active_single_kernel();
Kernel active_batch_kernel();
const char* kernel_name(Kernel k);

// Incremental hashing.
class Hasher {
public:
    Hasher() { reset(); }

    void reset();
    void update(ByteView data);
    void update(std::string_view s) { update(as_bytes(s)); }
    Digest finish();

private:
    std::uint32_t state_[8];
    std::uint64_t total_ = 0;
    std::uint8_t buf_[64];
    std::size_t buffered_ = 0;
};

Digest digest(ByteView data);
inline Digest digest(std::string_view s) { return digest(as_bytes(s)); }

// Hashes `count` messages that all share the same length `msg_len`; writes
// 32 bytes per message to `out`. This is the data-parallel entry point used
// by key expansion and Merkle tree construction.
void digest_batch(const std::uint8_t* const* msgs, std::size_t msg_len, std::size_t count,
                  std::uint8_t* out);

// Convenience wrapper over contiguous equal-length messages.
void digest_batch_strided(const std::uint8_t* base, std::size_t stride, std::size_t msg_len,
                          std::size_t count, std::uint8_t* out);

} // namespace hades::sha256
