#include "sha256_kernels.hpp"

#if defined(HADES_HAVE_SHANI_KERNEL)

#include <immintrin.h>

namespace hades::sha256::detail {

// Single-stream transform on the x86 SHA extensions. State is carried in the
// ABEF/CDGH packing the sha256rnds2 instruction expects.
void compress_shani(std::uint32_t state[8], const std::uint8_t* data, std::size_t nblocks) {
    const __m128i kByteswap = _mm_set_epi64x(0x0c0d0e0f08090a0bULL, 0x0405060700010203ULL);

    __m128i tmp = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&state[0]));
    __m128i state1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&state[4]));
    tmp = _mm_shuffle_epi32(tmp, 0xB1);
    state1 = _mm_shuffle_epi32(state1, 0x1B);
    __m128i state0 = _mm_alignr_epi8(tmp, state1, 8);        // ABEF
    state1 = _mm_blend_epi16(state1, tmp, 0xF0);             // CDGH

    auto quad_rounds = [&](int k_index, __m128i w) {
        __m128i m = _mm_add_epi32(w, _mm_loadu_si128(reinterpret_cast<const __m128i*>(&kRound[k_index])));
        state1 = _mm_sha256rnds2_epu32(state1, state0, m);
        m = _mm_shuffle_epi32(m, 0x0E);
        state0 = _mm_sha256rnds2_epu32(state0, state1, m);
    };

    while (nblocks--) {
        const __m128i save0 = state0;
        const __m128i save1 = state1;

        __m128i m0 = _mm_shuffle_epi8(_mm_loadu_si128(reinterpret_cast<const __m128i*>(data)), kByteswap);
        __m128i m1 = _mm_shuffle_epi8(_mm_loadu_si128(reinterpret_cast<const __m128i*>(data + 16)), kByteswap);
        __m128i m2 = _mm_shuffle_epi8(_mm_loadu_si128(reinterpret_cast<const __m128i*>(data + 32)), kByteswap);
        __m128i m3 = _mm_shuffle_epi8(_mm_loadu_si128(reinterpret_cast<const __m128i*>(data + 48)), kByteswap);

        quad_rounds(0, m0);
        quad_rounds(4, m1);
        quad_rounds(8, m2);
        quad_rounds(12, m3);

        auto schedule = [](__m128i& w0, __m128i w1, __m128i w2, __m128i w3) {
            w0 = _mm_sha256msg2_epu32(
                _mm_add_epi32(_mm_sha256msg1_epu32(w0, w1), _mm_alignr_epi8(w3, w2, 4)), w3);
        };

        for (int bank = 16; bank < 64; bank += 16) {
            schedule(m0, m1, m2, m3);
            quad_rounds(bank + 0, m0);
            schedule(m1, m2, m3, m0);
            quad_rounds(bank + 4, m1);
            schedule(m2, m3, m0, m1);
            quad_rounds(bank + 8, m2);
            schedule(m3, m0, m1, m2);
            quad_rounds(bank + 12, m3);
        }

        state0 = _mm_add_epi32(state0, save0);
        state1 = _mm_add_epi32(state1, save1);
        data += 64;
    }

    tmp = _mm_shuffle_epi32(state0, 0x1B);
    state1 = _mm_shuffle_epi32(state1, 0xB1);
    state0 = _mm_blend_epi16(tmp, state1, 0xF0);
    state1 = _mm_alignr_epi8(state1, tmp, 8);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(&state[0]), state0);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(&state[4]), state1);
}

} // namespace hades::sha256::detail

#endif // HADES_HAVE_SHANI_KERNEL
