#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <openssl/sha.h>

#include <cstring>
#include <random>

#include "hades/ots.hpp"

using namespace hades;
using namespace hades::ots;

// ---------------------------------------------------------------------------
// Independent oracle: a from-scratch implementation of the documented key
// expansion, signing rule, and tree fold on top of OpenSSL. Shares no code
// with the library.
namespace oracle {

Bytes sha(ByteView m) {
    Bytes d(32);
    SHA256(m.data(), m.size(), d.data());
    return d;
}

Bytes trunc(Bytes b, unsigned k) {
    b.resize(k / 8);
    return b;
}

Bytes lp64(ByteView b) {
    Bytes out;
    for (int s = 56; s >= 0; s -= 8)
        out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(b.size()) >> s));
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

Bytes u32(std::uint32_t v) {
    return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
            static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

Bytes cat(std::initializer_list<Bytes> parts) {
    Bytes out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

Bytes derive_sk(ByteView seed, std::uint32_t i, unsigned k) {
    Bytes secret = sha(cat({lp64(seed), u32(i)}));
    Bytes elems;
    for (std::uint32_t j = 1; j <= k; ++j)
        for (std::uint8_t b = 0; b < 2; ++b)
            elems = cat({elems, trunc(sha(cat({lp64(secret), {b}, u32(j)})), k)});
    return elems;
}

Bytes derive_pk(const Bytes& sk, unsigned k) {
    const std::size_t kb = k / 8;
    Bytes out;
    for (std::size_t e = 0; e < 2u * k; ++e)
        out = cat({out, trunc(sha(ByteView(sk).subspan(e * kb, kb)), k)});
    return out;
}

Bytes serialize_pk(const Bytes& pk_elems, unsigned k) {
    return cat({{static_cast<std::uint8_t>(k >> 8), static_cast<std::uint8_t>(k)}, pk_elems});
}

Bytes sign(const Bytes& sk, ByteView msg, unsigned k) {
    const std::size_t kb = k / 8;
    Bytes mh = trunc(sha(msg), k);
    Bytes out;
    for (unsigned i = 1; i <= k; ++i) {
        int bit = (mh[(i - 1) / 8] >> (7 - (i - 1) % 8)) & 1;
        std::size_t e = 2u * (i - 1) + (bit ? 0 : 1);
        out.insert(out.end(), sk.begin() + e * kb, sk.begin() + (e + 1) * kb);
    }
    return out;
}

// Recursive brute-force root over serialized public keys.
Bytes tree_root(const std::vector<Bytes>& serialized, unsigned k) {
    std::vector<Bytes> level;
    for (const auto& s : serialized) level.push_back(trunc(sha(s), k));
    while (level.size() > 1) {
        std::vector<Bytes> next;
        for (std::size_t i = 0; i < level.size(); i += 2)
            next.push_back(trunc(sha(cat({level[i], level[i + 1]})), k));
        level = std::move(next);
    }
    return level.front();
}

} // namespace oracle
// ---------------------------------------------------------------------------

namespace {

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
    Bytes b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    return b;
}

std::vector<LamportPublicKey> make_leaves(ByteView seed, std::uint32_t n, unsigned k) {
    std::vector<LamportPublicKey> out;
    for (std::uint32_t i = 1; i <= n; ++i)
        out.push_back(derive_leaf_keypair(seed, i, k).second);
    return out;
}

} // namespace

TEST_CASE("frozen vectors at K=16") {
    // Expected values computed externally with an unrelated implementation.
    Bytes seed = to_bytes("test-seed");
    auto [sk, pk] = derive_leaf_keypair(seed, 1, 16);
    CHECK(to_hex(sk.elements) ==
          "4e8717dda5ce89d88b185741d788ff40ad39d32db1deac48e3ffa87cb56939a1"
          "8336e0c00d00ed3bed5368b70b6d2514c489860a42c45f66ca0c69f30399f4d0");
    CHECK(to_hex(pk.elements) ==
          "64d340ffec257015411bd86810ecf3a39bf93c29e0b25fbc9a2f961a9f9061b5"
          "ecedb21df566a4aa16ff8de79db9a2a1b9b1dc13b3296bdac4656173d2c07585");
    auto sig = lamport_sign(sk, as_bytes("hello"));
    CHECK(to_hex(sig.revealed) ==
          "17dd89d88b18ff40ad39b1dea87c39a183360d00ed530b6d860a5f66ca0cf4d0");
    CHECK(to_hex(hash_k(16, as_bytes("hello"))) == "2cf2");

    auto leaves = make_leaves(seed, 4, 16);
    CHECK(to_hex(merkle_root({leaves[0]})) == "8175");
    CHECK(to_hex(merkle_root({leaves[0], leaves[1]})) == "c2f0");
    CHECK(to_hex(merkle_root(leaves)) == "ba2c");
}

TEST_CASE("size identities") {
    for (unsigned k : {16u, 64u, 128u, 256u}) {
        Bytes seed = to_bytes("s");
        auto [sk, pk] = derive_leaf_keypair(seed, 1, k);
        CHECK(sk.elements.size() == 2u * k * k / 8);        // 2K^2 bits
        CHECK(pk.elements.size() == 2u * k * k / 8);
        auto sig = lamport_sign(sk, as_bytes("m"));
        CHECK(sig.revealed.size() == k * k / 8);            // K^2 bits
    }
    // The headline parameterization.
    Bytes seed = to_bytes("sz");
    auto [sk, pk] = derive_leaf_keypair(seed, 3, 256);
    CHECK(sk.elements.size() == 16384);
    CHECK(lamport_sign(sk, as_bytes("m")).revealed.size() == 8192);
    CHECK(merkle_signature_size(256, 1u << 15) == 8672);
    CHECK(merkle_signature_size(256, 1) == 8192);
    CHECK(merkle_signature_size(16, 4) == 36);

    // An actual transmitted signature matches the formula: revealed elements
    // plus path hashes.
    auto leaves = make_leaves(seed, 8, 16);
    auto path = auth_path(leaves, 5);
    auto sig = lamport_sign(derive_leaf_keypair(seed, 5, 16).first, as_bytes("m"));
    std::size_t wire = sig.revealed.size();
    for (const auto& node : path.nodes) wire += node.hash.size();
    CHECK(wire == merkle_signature_size(16, 8));
}

TEST_CASE("keypair derivation is deterministic and index-separated") {
    Bytes seed = to_bytes("another seed value");
    auto a1 = derive_leaf_keypair(seed, 1, 16);
    auto a2 = derive_leaf_keypair(seed, 1, 16);
    CHECK(a1.first.elements == a2.first.elements);
    CHECK(a1.second.elements == a2.second.elements);
    auto b = derive_leaf_keypair(seed, 2, 16);
    CHECK(a1.first.elements != b.first.elements);
    CHECK_THROWS_AS(derive_leaf_keypair(seed, 0, 16), IndexOutOfRange);
    CHECK_THROWS_AS(derive_leaf_keypair(seed, 1, 20), Error); // K not multiple of 8
    CHECK_THROWS_AS(derive_leaf_keypair(seed, 1, 8), Error);  // K too small
}

TEST_CASE("public key is the element-wise hash of the private key") {
    std::mt19937_64 rng(10);
    for (unsigned k : {16u, 40u, 256u}) {
        Bytes seed = random_bytes(rng, 16);
        auto [sk, pk] = derive_leaf_keypair(seed, 7, k);
        CHECK(pk.elements == oracle::derive_pk(sk.elements, k));
    }
}

TEST_CASE("randomized agreement with the oracle signer") {
    std::mt19937_64 rng(11);
    Bytes seed = random_bytes(rng, 24);
    for (unsigned k : {16u, 24u}) {
        Bytes oracle_sk = oracle::derive_sk(seed, 9, k);
        auto [sk, pk] = derive_leaf_keypair(seed, 9, k);
        CHECK(sk.elements == oracle_sk);
        for (int t = 0; t < 100; ++t) {
            Bytes msg = random_bytes(rng, rng() % 100);
            CHECK(lamport_sign(sk, msg).revealed == oracle::sign(oracle_sk, msg, k));
        }
    }
}

TEST_CASE("all-ones message hash reveals only first elements") {
    // At K=16, search nonces until h_16(m) = 0xffff; the signature must then
    // equal the concatenation of every pair's first element.
    Bytes seed = to_bytes("ones");
    auto [sk, pk] = derive_leaf_keypair(seed, 1, 16);
    for (std::uint64_t nonce = 0;; ++nonce) {
        std::string m = "n" + std::to_string(nonce);
        Bytes mh = hash_k(16, as_bytes(m));
        if (mh[0] == 0xff && mh[1] == 0xff) {
            auto sig = lamport_sign(sk, as_bytes(m));
            Bytes first_elems;
            for (unsigned j = 0; j < 16; ++j)
                first_elems.insert(first_elems.end(), sk.elements.begin() + 4 * j,
                                   sk.elements.begin() + 4 * j + 2);
            CHECK(sig.revealed == first_elems);
            break;
        }
        REQUIRE(nonce < 3'000'000); // expected ~65k tries
    }
}

TEST_CASE("honest sign/verify round-trips across K") {
    std::mt19937_64 rng(12);
    for (unsigned k = 16; k <= 256; k += 40) {
        Bytes seed = random_bytes(rng, 32);
        auto [sk, pk] = derive_leaf_keypair(seed, 2, k);
        for (int t = 0; t < 20; ++t) {
            Bytes msg = random_bytes(rng, 1 + rng() % 200);
            CHECK(lamport_verify(pk, msg, lamport_sign(sk, msg)));
        }
    }
}

TEST_CASE("corrupted messages and signatures are rejected") {
    std::mt19937_64 rng(13);
    Bytes seed = random_bytes(rng, 32);
    auto [sk, pk] = derive_leaf_keypair(seed, 1, 16);
    for (int t = 0; t < 300; ++t) {
        Bytes msg = random_bytes(rng, 1 + rng() % 50);
        auto sig = lamport_sign(sk, msg);

        Bytes msg2 = msg;
        msg2[rng() % msg2.size()] ^= 1 << (rng() % 8);
        CHECK_FALSE(lamport_verify(pk, msg2, sig));

        LamportSignature sig2 = sig;
        sig2.revealed[rng() % sig2.revealed.size()] ^= 1 << (rng() % 8);
        CHECK_FALSE(lamport_verify(pk, msg, sig2));
    }
}

TEST_CASE("malformed signatures throw") {
    Bytes seed = to_bytes("m");
    auto [sk, pk] = derive_leaf_keypair(seed, 1, 16);
    auto sig = lamport_sign(sk, as_bytes("x"));
    LamportSignature bad = sig;
    bad.revealed.pop_back();
    CHECK_THROWS_AS(lamport_verify(pk, as_bytes("x"), bad), MalformedSignature);
    LamportSignature wrong_k = sig;
    wrong_k.k = 24;
    CHECK_THROWS_AS(lamport_verify(pk, as_bytes("x"), wrong_k), MalformedSignature);
}

TEST_CASE("merkle root matches brute-force oracle for all small sizes") {
    std::mt19937_64 rng(14);
    for (std::uint32_t n : {1u, 2u, 4u, 8u, 16u}) {
        Bytes seed = random_bytes(rng, 16);
        auto leaves = make_leaves(seed, n, 16);
        // The oracle builds its serialized leaves from its own derivation chain.
        std::vector<Bytes> serialized;
        for (std::uint32_t i = 1; i <= n; ++i)
            serialized.push_back(
                oracle::serialize_pk(oracle::derive_pk(oracle::derive_sk(seed, i, 16), 16), 16));
        CHECK(merkle_root(leaves) == oracle::tree_root(serialized, 16));
    }
    CHECK_THROWS_AS(merkle_root(make_leaves(to_bytes("s"), 3, 16)), NotPowerOfTwo);
    CHECK_THROWS_AS(merkle_root({}), NotPowerOfTwo);
}

TEST_CASE("permuting leaves changes the root") {
    auto leaves = make_leaves(to_bytes("perm"), 4, 16);
    auto root = merkle_root(leaves);
    std::swap(leaves[1], leaves[2]);
    CHECK(merkle_root(leaves) != root);
}

TEST_CASE("auth paths fold back to the root for every leaf") {
    Bytes seed = to_bytes("paths");
    for (std::uint32_t n : {1u, 2u, 16u}) {
        auto leaves = make_leaves(seed, n, 16);
        auto root = merkle_root(leaves);
        for (std::uint32_t i = 1; i <= n; ++i) {
            auto [sk, pk] = derive_leaf_keypair(seed, i, 16);
            auto path = auth_path(leaves, i);
            CHECK(path.nodes.size() == static_cast<std::size_t>(std::countr_zero(n)));
            Bytes msg = to_bytes("msg" + std::to_string(i));
            CHECK(merkle_verify(root, msg, lamport_sign(sk, msg), pk, path, i));
        }
    }
    auto leaves = make_leaves(seed, 2, 16);
    CHECK_THROWS_AS(auth_path(leaves, 0), IndexOutOfRange);
    CHECK_THROWS_AS(auth_path(leaves, 3), IndexOutOfRange);

    // N=2, leaf 1: the single path node is leaf 2's hash, sitting to the right.
    auto path = auth_path(leaves, 1);
    REQUIRE(path.nodes.size() == 1);
    CHECK(path.nodes[0].side == Side::Right);
    CHECK(path.nodes[0].hash == hash_k(16, serialize_public_key(leaves[1])));
}

TEST_CASE("merkle verification rejects wrong paths, leaves, and roots") {
    Bytes seed = to_bytes("neg");
    const std::uint32_t n = 8;
    auto leaves = make_leaves(seed, n, 16);
    auto root = merkle_root(leaves);
    auto [sk3, pk3] = derive_leaf_keypair(seed, 3, 16);
    Bytes msg = to_bytes("command");
    auto sig = lamport_sign(sk3, msg);
    auto path3 = auth_path(leaves, 3);
    REQUIRE(merkle_verify(root, msg, sig, pk3, path3, 3));

    // Path of a different leaf.
    CHECK_FALSE(merkle_verify(root, msg, sig, pk3, auth_path(leaves, 4), 3));
    // Same path, different claimed index: the side bits no longer line up.
    CHECK_FALSE(merkle_verify(root, msg, sig, pk3, path3, 4));
    CHECK_FALSE(merkle_verify(root, msg, sig, pk3, path3, 7));
    // Corrupted path node.
    auto bad_path = path3;
    bad_path.nodes[1].hash[0] ^= 0x80;
    CHECK_FALSE(merkle_verify(root, msg, sig, pk3, bad_path, 3));
    // Flipped side marker.
    auto flipped = path3;
    flipped.nodes[0].side = flipped.nodes[0].side == Side::Left ? Side::Right : Side::Left;
    CHECK_FALSE(merkle_verify(root, msg, sig, pk3, flipped, 3));
    // Wrong root.
    Bytes other_root = merkle_root(make_leaves(to_bytes("other"), n, 16));
    CHECK_FALSE(merkle_verify(other_root, msg, sig, pk3, path3, 3));

    // Structural defects throw.
    auto short_path = path3;
    short_path.nodes.pop_back();
    CHECK_THROWS_AS(merkle_verify(root, msg, sig, pk3, short_path, 5), MalformedPath);
    auto fat_node = path3;
    fat_node.nodes[0].hash.push_back(0);
    CHECK_THROWS_AS(merkle_verify(root, msg, sig, pk3, fat_node, 3), MalformedPath);
    Bytes bad_root(3, 0);
    CHECK_THROWS_AS(merkle_verify(bad_root, msg, sig, pk3, path3, 3), MalformedPath);
    CHECK_THROWS_AS(merkle_verify(root, msg, sig, pk3, path3, 0), IndexOutOfRange);
}

TEST_CASE("leaf reuse with a different message reveals mismatching elements") {
    // Signing two distinct messages with one leaf must expose at least one
    // pair position where different elements were revealed (the one-time
    // property the replay counter protects).
    std::mt19937_64 rng(15);
    Bytes seed = random_bytes(rng, 32);
    auto [sk, pk] = derive_leaf_keypair(seed, 1, 16);
    int observed_differences = 0;
    for (int t = 0; t < 50; ++t) {
        Bytes m1 = random_bytes(rng, 20), m2 = random_bytes(rng, 20);
        Bytes h1 = hash_k(16, m1), h2 = hash_k(16, m2);
        if (h1 == h2) continue;
        auto s1 = lamport_sign(sk, m1), s2 = lamport_sign(sk, m2);
        CHECK(s1.revealed != s2.revealed);
        ++observed_differences;
    }
    CHECK(observed_differences >= 45);
}

TEST_CASE("key material caches the same tree the list API computes") {
    Bytes seed = to_bytes("material");
    MerkleKeyMaterial km(seed, 16, 16);
    auto leaves = make_leaves(seed, 16, 16);
    CHECK(km.root() == merkle_root(leaves));
    for (std::uint32_t i = 1; i <= 16; ++i) {
        auto [sk, pk] = km.leaf_keypair(i);
        CHECK(pk.elements == leaves[i - 1].elements);
        auto path = km.leaf_auth_path(i);
        auto expect = auth_path(leaves, i);
        REQUIRE(path.nodes.size() == expect.nodes.size());
        for (std::size_t l = 0; l < path.nodes.size(); ++l) {
            CHECK(path.nodes[l].side == expect.nodes[l].side);
            CHECK(path.nodes[l].hash == expect.nodes[l].hash);
        }
        Bytes msg = to_bytes("m" + std::to_string(i));
        CHECK(merkle_verify(km.root(), msg, lamport_sign(sk, msg), pk, path, i));
    }
    CHECK_THROWS_AS(km.leaf_keypair(0), IndexOutOfRange);
    CHECK_THROWS_AS(km.leaf_keypair(17), IndexOutOfRange);
    CHECK_THROWS_AS(km.leaf_auth_path(17), IndexOutOfRange);
    CHECK_THROWS_AS(MerkleKeyMaterial(seed, 6, 16), NotPowerOfTwo);
    CHECK_THROWS_AS(MerkleKeyMaterial(Bytes{}, 4, 16), Error);
}

TEST_CASE("seed file round-trip") {
    MerkleKeyMaterial km(to_bytes("persist-me"), 8, 24);
    Bytes file = km.serialize_seed_file();
    auto back = MerkleKeyMaterial::from_seed_file(file);
    CHECK(back.root() == km.root());
    CHECK(back.k() == 24);
    CHECK(back.leaf_count() == 8);
    CHECK(back.seed() == km.seed());

    Bytes bad = file;
    bad[0] ^= 1;
    CHECK_THROWS_AS(MerkleKeyMaterial::from_seed_file(bad), ParseError);
    Bytes truncated(file.begin(), file.end() - 3);
    CHECK_THROWS_AS(MerkleKeyMaterial::from_seed_file(truncated), ParseError);
}

TEST_CASE("generate uses distinct random seeds") {
    auto a = MerkleKeyMaterial::generate(2, 16);
    auto b = MerkleKeyMaterial::generate(2, 16);
    CHECK(a.seed() != b.seed());
    CHECK(a.seed().size() == 32);
}

TEST_CASE("public key serialization round-trips") {
    auto pk = derive_leaf_keypair(to_bytes("ser"), 1, 16).second;
    auto bytes = serialize_public_key(pk);
    CHECK(bytes.size() == 2 + pk.elements.size());
    auto back = parse_public_key(bytes);
    CHECK(back == pk);
    Bytes junk = bytes;
    junk.pop_back();
    CHECK_THROWS_AS(parse_public_key(junk), ParseError);
}
