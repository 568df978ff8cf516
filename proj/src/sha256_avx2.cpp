#include "sha256_kernels.hpp"

#if defined(HADES_HAVE_AVX2_KERNEL)

#include <immintrin.h>

namespace hades::sha256::detail {

namespace {

inline __m256i rotr(__m256i x, int n) {
    return _mm256_or_si256(_mm256_srli_epi32(x, n), _mm256_slli_epi32(x, 32 - n));
}

inline __m256i big_sigma0(__m256i a) {
    return _mm256_xor_si256(_mm256_xor_si256(rotr(a, 2), rotr(a, 13)), rotr(a, 22));
}

inline __m256i big_sigma1(__m256i e) {
    return _mm256_xor_si256(_mm256_xor_si256(rotr(e, 6), rotr(e, 11)), rotr(e, 25));
}

inline __m256i small_sigma0(__m256i x) {
    return _mm256_xor_si256(_mm256_xor_si256(rotr(x, 7), rotr(x, 18)), _mm256_srli_epi32(x, 3));
}

inline __m256i small_sigma1(__m256i x) {
    return _mm256_xor_si256(_mm256_xor_si256(rotr(x, 17), rotr(x, 19)), _mm256_srli_epi32(x, 10));
}

inline __m256i choose(__m256i e, __m256i f, __m256i g) {
    return _mm256_xor_si256(_mm256_and_si256(e, f), _mm256_andnot_si256(e, g));
}

inline __m256i majority(__m256i a, __m256i b, __m256i c) {
    return _mm256_xor_si256(_mm256_xor_si256(_mm256_and_si256(a, b), _mm256_and_si256(a, c)),
                            _mm256_and_si256(b, c));
}

inline std::uint32_t load_be32(const std::uint8_t* p) {
    std::uint32_t v;
    __builtin_memcpy(&v, p, 4);
    return __builtin_bswap32(v);
}

// One 32-bit word per lane, lane L in element L.
inline __m256i gather_word(const std::uint8_t* const blocks[8], int word) {
    return _mm256_set_epi32(load_be32(blocks[7] + 4 * word), load_be32(blocks[6] + 4 * word),
                            load_be32(blocks[5] + 4 * word), load_be32(blocks[4] + 4 * word),
                            load_be32(blocks[3] + 4 * word), load_be32(blocks[2] + 4 * word),
                            load_be32(blocks[1] + 4 * word), load_be32(blocks[0] + 4 * word));
}

} // namespace

void compress8_avx2(std::uint32_t states[8][8], const std::uint8_t* const blocks[8]) {
    __m256i w[64];
    for (int t = 0; t < 16; ++t) w[t] = gather_word(blocks, t);
    for (int t = 16; t < 64; ++t) {
        w[t] = _mm256_add_epi32(
            _mm256_add_epi32(w[t - 16], small_sigma0(w[t - 15])),
            _mm256_add_epi32(w[t - 7], small_sigma1(w[t - 2])));
    }

    __m256i v[8];
    alignas(32) std::uint32_t tmp[8];
    for (int word = 0; word < 8; ++word) {
        for (int lane = 0; lane < 8; ++lane) tmp[lane] = states[lane][word];
        v[word] = _mm256_load_si256(reinterpret_cast<const __m256i*>(tmp));
    }

    __m256i a = v[0], b = v[1], c = v[2], d = v[3];
    __m256i e = v[4], f = v[5], g = v[6], h = v[7];

    for (int t = 0; t < 64; ++t) {
        __m256i t1 = _mm256_add_epi32(
            _mm256_add_epi32(_mm256_add_epi32(h, big_sigma1(e)), choose(e, f, g)),
            _mm256_add_epi32(_mm256_set1_epi32(static_cast<int>(kRound[t])), w[t]));
        __m256i t2 = _mm256_add_epi32(big_sigma0(a), majority(a, b, c));
        h = g;
        g = f;
        f = e;
        e = _mm256_add_epi32(d, t1);
        d = c;
        c = b;
        b = a;
        a = _mm256_add_epi32(t1, t2);
    }

    v[0] = _mm256_add_epi32(v[0], a);
    v[1] = _mm256_add_epi32(v[1], b);
    v[2] = _mm256_add_epi32(v[2], c);
    v[3] = _mm256_add_epi32(v[3], d);
    v[4] = _mm256_add_epi32(v[4], e);
    v[5] = _mm256_add_epi32(v[5], f);
    v[6] = _mm256_add_epi32(v[6], g);
    v[7] = _mm256_add_epi32(v[7], h);

    for (int word = 0; word < 8; ++word) {
        _mm256_store_si256(reinterpret_cast<__m256i*>(tmp), v[word]);
        for (int lane = 0; lane < 8; ++lane) states[lane][word] = tmp[lane];
    }
}

} // namespace hades::sha256::detail

#endif // HADES_HAVE_AVX2_KERNEL
