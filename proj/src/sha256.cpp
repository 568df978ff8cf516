#include "hades/sha256.hpp"

#include <cstring>

#include "hades/error.hpp"
#include "sha256_kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <cpuid.h>
#define HADES_X86_64 1
#endif

namespace hades::sha256 {

namespace detail {

static inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

static inline std::uint32_t load_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

void compress_scalar(std::uint32_t state[8], const std::uint8_t* blocks, std::size_t nblocks) {
    std::uint32_t w[64];
    while (nblocks--) {
        for (int t = 0; t < 16; ++t) w[t] = load_be32(blocks + 4 * t);
        for (int t = 16; t < 64; ++t) {
            std::uint32_t s0 = rotr(w[t - 15], 7) ^ rotr(w[t - 15], 18) ^ (w[t - 15] >> 3);
            std::uint32_t s1 = rotr(w[t - 2], 17) ^ rotr(w[t - 2], 19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16] + s0 + w[t - 7] + s1;
        }
        std::uint32_t a = state[0], b = state[1], c = state[2], d = state[3];
        std::uint32_t e = state[4], f = state[5], g = state[6], h = state[7];
        for (int t = 0; t < 64; ++t) {
            std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            std::uint32_t ch = (e & f) ^ (~e & g);
            std::uint32_t t1 = h + S1 + ch + kRound[t] + w[t];
            std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            std::uint32_t t2 = S0 + maj;
            h = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        state[0] += a;
        state[1] += b;
        state[2] += c;
        state[3] += d;
        state[4] += e;
        state[5] += f;
        state[6] += g;
        state[7] += h;
        blocks += 64;
    }
}

#if defined(HADES_X86_64)

static void cpuid_count(unsigned leaf, unsigned sub, unsigned out[4]) {
    unsigned a = 0, b = 0, c = 0, d = 0;
    __get_cpuid_count(leaf, sub, &a, &b, &c, &d);
    out[0] = a;
    out[1] = b;
    out[2] = c;
    out[3] = d;
}

static std::uint64_t xgetbv0() {
    std::uint32_t eax, edx;
    __asm__ volatile("xgetbv" : "=a"(eax), "=d"(edx) : "c"(0));
    return (std::uint64_t(edx) << 32) | eax;
}

bool cpu_has_avx2() {
    unsigned r[4];
    cpuid_count(1, 0, r);
    bool osxsave = r[2] & (1u << 27);
    bool avx = r[2] & (1u << 28);
    if (!osxsave || !avx) return false;
    if ((xgetbv0() & 0x6) != 0x6) return false; // OS saves ymm state
    cpuid_count(7, 0, r);
    return (r[1] & (1u << 5)) != 0;
}

bool cpu_has_shani() {
    unsigned r[4];
    cpuid_count(1, 0, r);
    bool sse41 = r[2] & (1u << 19);
    if (!sse41) return false;
    cpuid_count(7, 0, r);
    return (r[1] & (1u << 29)) != 0;
}

#else

bool cpu_has_avx2() { return false; }
bool cpu_has_shani() { return false; }

#endif

} // namespace detail

namespace {

using CompressFn = void (*)(std::uint32_t*, const std::uint8_t*, std::size_t);

struct Dispatch {
    CompressFn compress = detail::compress_scalar;
    bool avx2_batch = false;
    Kernel single_kernel = Kernel::Scalar;
    Kernel batch_kernel = Kernel::Scalar;
};

Kernel g_forced = Kernel::Auto;
bool g_resolved = false;
Dispatch g_dispatch;

Dispatch resolve(Kernel forced) {
    Dispatch d;
    bool shani = kernel_available(Kernel::ShaNi);
    bool avx2 = kernel_available(Kernel::Avx2);
    switch (forced) {
    case Kernel::Scalar:
        break;
    case Kernel::ShaNi:
#if defined(HADES_HAVE_SHANI_KERNEL)
        d.compress = detail::compress_shani;
        d.single_kernel = d.batch_kernel = Kernel::ShaNi;
#endif
        break;
    case Kernel::Avx2:
        // Batch rides the 8-way transform; stragglers go through scalar.
        d.avx2_batch = true;
        d.batch_kernel = Kernel::Avx2;
        break;
    case Kernel::Auto:
#if defined(HADES_HAVE_SHANI_KERNEL)
        if (shani) {
            d.compress = detail::compress_shani;
            d.single_kernel = d.batch_kernel = Kernel::ShaNi;
        }
#endif
        if (avx2) {
            d.avx2_batch = true;
            d.batch_kernel = Kernel::Avx2;
        }
        break;
    }
    (void)shani;
    (void)avx2;
    return d;
}

const Dispatch& active() {
    if (!g_resolved) {
        g_dispatch = resolve(g_forced);
        g_resolved = true;
    }
    return g_dispatch;
}

} // namespace

bool kernel_available(Kernel k) {
    switch (k) {
    case Kernel::Auto:
    case Kernel::Scalar:
        return true;
    case Kernel::ShaNi:
#if defined(HADES_HAVE_SHANI_KERNEL)
        return detail::cpu_has_shani();
#else
        return false;
#endif
    case Kernel::Avx2:
#if defined(HADES_HAVE_AVX2_KERNEL)
        return detail::cpu_has_avx2();
#else
        return false;
#endif
    }
    return false;
}

void set_kernel(Kernel k) {
    if (!kernel_available(k)) throw Error("sha256 kernel not available on this CPU/build");
    g_forced = k;
    g_resolved = false;
}

Kernel active_single_kernel() { return active().single_kernel; }
Kernel active_batch_kernel() { return active().batch_kernel; }

const char* kernel_name(Kernel k) {
    switch (k) {
    case Kernel::Auto: return "auto";
    case Kernel::Scalar: return "scalar";
    case Kernel::ShaNi: return "sha-ni";
    case Kernel::Avx2: return "avx2-x8";
    }
    return "?";
}

void Hasher::reset() {
    std::memcpy(state_, detail::kInit, sizeof(state_));
    total_ = 0;
    buffered_ = 0;
}

void Hasher::update(ByteView data) {
    const std::uint8_t* p = data.data();
    std::size_t n = data.size();
    total_ += n;
    if (buffered_ > 0) {
        std::size_t take = std::min(n, std::size_t(64) - buffered_);
        std::memcpy(buf_ + buffered_, p, take);
        buffered_ += take;
        p += take;
        n -= take;
        if (buffered_ == 64) {
            active().compress(state_, buf_, 1);
            buffered_ = 0;
        }
    }
    std::size_t whole = n / 64;
    if (whole > 0) {
        active().compress(state_, p, whole);
        p += whole * 64;
        n -= whole * 64;
    }
    if (n > 0) {
        std::memcpy(buf_, p, n);
        buffered_ = n;
    }
}

Digest Hasher::finish() {
    std::uint8_t final_block[128];
    std::size_t tail = buffered_;
    std::memcpy(final_block, buf_, tail);
    final_block[tail] = 0x80;
    std::size_t padded = (tail + 1 + 8 <= 64) ? 64 : 128;
    std::memset(final_block + tail + 1, 0, padded - tail - 1 - 8);
    std::uint64_t bits = total_ * 8;
    for (int i = 0; i < 8; ++i)
        final_block[padded - 8 + i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
    active().compress(state_, final_block, padded / 64);

    Digest out;
    for (int i = 0; i < 8; ++i) {
        out[4 * i] = static_cast<std::uint8_t>(state_[i] >> 24);
        out[4 * i + 1] = static_cast<std::uint8_t>(state_[i] >> 16);
        out[4 * i + 2] = static_cast<std::uint8_t>(state_[i] >> 8);
        out[4 * i + 3] = static_cast<std::uint8_t>(state_[i]);
    }
    buffered_ = 0; // finish() consumed the buffer; reset() restarts cleanly
    return out;
}

Digest digest(ByteView data) {
    Hasher h;
    h.update(data);
    return h.finish();
}

namespace {

void store_digest(const std::uint32_t state[8], std::uint8_t* out) {
    for (int i = 0; i < 8; ++i) {
        out[4 * i] = static_cast<std::uint8_t>(state[i] >> 24);
        out[4 * i + 1] = static_cast<std::uint8_t>(state[i] >> 16);
        out[4 * i + 2] = static_cast<std::uint8_t>(state[i] >> 8);
        out[4 * i + 3] = static_cast<std::uint8_t>(state[i]);
    }
}

// Builds the terminal block(s) for a message of length msg_len whose tail
// (msg_len % 64 bytes) is at `tail`. Returns 1 or 2 blocks written to `out`.
std::size_t build_final_blocks(const std::uint8_t* tail, std::size_t msg_len,
                               std::uint8_t out[128]) {
    std::size_t t = msg_len % 64;
    std::memcpy(out, tail, t);
    out[t] = 0x80;
    std::size_t padded = (t + 1 + 8 <= 64) ? 64 : 128;
    std::memset(out + t + 1, 0, padded - t - 1 - 8);
    std::uint64_t bits = std::uint64_t(msg_len) * 8;
    for (int i = 0; i < 8; ++i) out[padded - 8 + i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
    return padded / 64;
}

void digest_one(CompressFn compress, const std::uint8_t* msg, std::size_t len, std::uint8_t* out) {
    std::uint32_t state[8];
    std::memcpy(state, detail::kInit, sizeof(state));
    std::size_t whole = len / 64;
    if (whole > 0) compress(state, msg, whole);
    std::uint8_t fin[128];
    std::size_t nfin = build_final_blocks(msg + whole * 64, len, fin);
    compress(state, fin, nfin);
    store_digest(state, out);
}

#if defined(HADES_HAVE_AVX2_KERNEL)
void digest8_avx2(const std::uint8_t* const msgs[8], std::size_t msg_len, std::uint8_t* out) {
    std::uint32_t states[8][8];
    for (int lane = 0; lane < 8; ++lane) std::memcpy(states[lane], detail::kInit, 32);

    std::size_t whole = msg_len / 64;
    const std::uint8_t* ptrs[8];
    for (std::size_t b = 0; b < whole; ++b) {
        for (int lane = 0; lane < 8; ++lane) ptrs[lane] = msgs[lane] + b * 64;
        detail::compress8_avx2(states, ptrs);
    }

    std::uint8_t fin[8][128];
    std::size_t nfin = 0;
    for (int lane = 0; lane < 8; ++lane)
        nfin = build_final_blocks(msgs[lane] + whole * 64, msg_len, fin[lane]);
    for (std::size_t b = 0; b < nfin; ++b) {
        for (int lane = 0; lane < 8; ++lane) ptrs[lane] = fin[lane] + b * 64;
        detail::compress8_avx2(states, ptrs);
    }

    for (int lane = 0; lane < 8; ++lane) store_digest(states[lane], out + 32 * lane);
}
#endif

} // namespace

void digest_batch(const std::uint8_t* const* msgs, std::size_t msg_len, std::size_t count,
                  std::uint8_t* out) {
    const Dispatch& d = active();
    std::size_t i = 0;
#if defined(HADES_HAVE_AVX2_KERNEL)
    if (d.avx2_batch) {
        for (; i + 8 <= count; i += 8) digest8_avx2(msgs + i, msg_len, out + 32 * i);
    }
#endif
    for (; i < count; ++i) digest_one(d.compress, msgs[i], msg_len, out + 32 * i);
}

void digest_batch_strided(const std::uint8_t* base, std::size_t stride, std::size_t msg_len,
                          std::size_t count, std::uint8_t* out) {
    const std::uint8_t* ptrs[64];
    std::size_t done = 0;
    while (done < count) {
        std::size_t chunk = std::min<std::size_t>(64, count - done);
        for (std::size_t j = 0; j < chunk; ++j) ptrs[j] = base + (done + j) * stride;
        digest_batch(ptrs, msg_len, chunk, out + 32 * done);
        done += chunk;
    }
}

} // namespace hades::sha256
