#include <cstring>

#include "hades/ots.hpp"
#include "hades/sha256.hpp"

namespace hades::ots {

void validate_k(unsigned k) {
    if (k < 16 || k > 256 || k % 8 != 0)
        throw Error("security parameter K must be a multiple of 8 in [16,256], got " +
                    std::to_string(k));
}

Bytes hash_k(unsigned k, ByteView data) {
    validate_k(k);
    auto d = sha256::digest(data);
    return Bytes(d.begin(), d.begin() + k / 8);
}

namespace {

// Truncates each 32-byte digest in `full` (count of them) to kb bytes,
// appending to `out`.
void append_truncated(Bytes& out, const std::uint8_t* full, std::size_t count,
                      std::size_t kb) {
    for (std::size_t i = 0; i < count; ++i)
        out.insert(out.end(), full + 32 * i, full + 32 * i + kb);
}

// MSB-first, 1-based bit i of a hash.
inline int bit_at(const Bytes& h, unsigned i) {
    return (h[(i - 1) / 8] >> (7 - (i - 1) % 8)) & 1;
}

} // namespace

Bytes serialize_public_key(const LamportPublicKey& pk) {
    validate_k(pk.k);
    if (pk.elements.size() != 2u * pk.k * (pk.k / 8))
        throw MalformedSignature("public key has wrong element count");
    Bytes out;
    out.reserve(2 + pk.elements.size());
    put_u16be(out, static_cast<std::uint16_t>(pk.k));
    put_bytes(out, pk.elements);
    return out;
}

LamportPublicKey parse_public_key(ByteView data) {
    ByteReader r{data};
    LamportPublicKey pk;
    pk.k = r.u16be();
    validate_k(pk.k);
    auto elems = r.bytes(2u * pk.k * (pk.k / 8));
    pk.elements.assign(elems.begin(), elems.end());
    r.expect_done();
    return pk;
}

LamportPublicKey derive_public_key(const LamportPrivateKey& sk) {
    validate_k(sk.k);
    const std::size_t kb = sk.k / 8;
    const std::size_t count = 2u * sk.k;
    if (sk.elements.size() != count * kb)
        throw Error("private key has wrong element count");
    std::vector<std::uint8_t> full(count * 32);
    sha256::digest_batch_strided(sk.elements.data(), kb, kb, count, full.data());
    LamportPublicKey pk;
    pk.k = sk.k;
    pk.elements.reserve(count * kb);
    append_truncated(pk.elements, full.data(), count, kb);
    return pk;
}

std::pair<LamportPrivateKey, LamportPublicKey> derive_leaf_keypair(ByteView seed,
                                                                   std::uint32_t i,
                                                                   unsigned k) {
    validate_k(k);
    if (i == 0) throw IndexOutOfRange("leaf indices are 1-based");
    const std::size_t kb = k / 8;

    Bytes secret_msg;
    put_lp64(secret_msg, seed);
    put_u32be(secret_msg, i);
    auto leaf_secret = sha256::digest(secret_msg);

    // 2K equal-length expansion messages: lp64(leaf_secret) || b || u32be j.
    const std::size_t count = 2u * k;
    const std::size_t msg_len = 8 + 32 + 1 + 4;
    const std::size_t stride = 48;
    std::vector<std::uint8_t> msgs(count * stride, 0);
    for (unsigned j = 1; j <= k; ++j) {
        for (unsigned b = 0; b < 2; ++b) {
            std::uint8_t* m = msgs.data() + (2u * (j - 1) + b) * stride;
            m[7] = 32; // u64be length of leaf_secret
            std::memcpy(m + 8, leaf_secret.data(), 32);
            m[40] = static_cast<std::uint8_t>(b);
            m[41] = static_cast<std::uint8_t>(j >> 24);
            m[42] = static_cast<std::uint8_t>(j >> 16);
            m[43] = static_cast<std::uint8_t>(j >> 8);
            m[44] = static_cast<std::uint8_t>(j);
        }
    }
    std::vector<std::uint8_t> full(count * 32);
    sha256::digest_batch_strided(msgs.data(), stride, msg_len, count, full.data());

    LamportPrivateKey sk;
    sk.k = k;
    sk.elements.reserve(count * kb);
    append_truncated(sk.elements, full.data(), count, kb);
    return {sk, derive_public_key(sk)};
}

LamportSignature lamport_sign(const LamportPrivateKey& sk, ByteView message) {
    validate_k(sk.k);
    const std::size_t kb = sk.k / 8;
    if (sk.elements.size() != 2u * sk.k * kb)
        throw Error("private key has wrong element count");
    Bytes mh = hash_k(sk.k, message);
    LamportSignature sig;
    sig.k = sk.k;
    sig.revealed.reserve(sk.k * kb);
    for (unsigned i = 1; i <= sk.k; ++i) {
        // Bit 1 selects the first element of the pair, bit 0 the second.
        std::size_t elem = 2u * (i - 1) + (bit_at(mh, i) ? 0 : 1);
        auto* p = sk.elements.data() + elem * kb;
        sig.revealed.insert(sig.revealed.end(), p, p + kb);
    }
    return sig;
}

bool lamport_verify(const LamportPublicKey& pk, ByteView message,
                    const LamportSignature& sig) {
    validate_k(pk.k);
    const std::size_t kb = pk.k / 8;
    if (pk.elements.size() != 2u * pk.k * kb)
        throw MalformedSignature("public key has wrong element count");
    if (sig.k != pk.k || sig.revealed.size() != pk.k * kb)
        throw MalformedSignature("signature has wrong element count");

    Bytes mh = hash_k(pk.k, message);
    std::vector<std::uint8_t> full(pk.k * 32);
    sha256::digest_batch_strided(sig.revealed.data(), kb, kb, pk.k, full.data());
    for (unsigned i = 1; i <= pk.k; ++i) {
        std::size_t elem = 2u * (i - 1) + (bit_at(mh, i) ? 0 : 1);
        if (std::memcmp(full.data() + 32 * (i - 1), pk.elements.data() + elem * kb, kb) != 0)
            return false;
    }
    return true;
}

} // namespace hades::ots
