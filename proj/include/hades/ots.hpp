#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hades/bytes.hpp"
#include "hades/error.hpp"

// Lamport one-time signatures aggregated under a Merkle tree.
//
// Parameterized by the security parameter K (bits). All hashes are h_K =
// SHA-256 truncated to the first K bits, so every key element, tree node, and
// the root are K-bit values. The selection rule reveals the FIRST element of
// pair i when bit i of h_K(message) is 1 (bits counted MSB-first, 1-based).
// One-time-use discipline is the caller's job (the control protocol tracks a
// replay counter); nothing here mutates key material.
namespace hades::ots {

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class NotPowerOfTwo : public Error {
public:
    using Error::Error;
};

class MalformedSignature : public Error {
public:
    using Error::Error;
};

class MalformedPath : public Error {
public:
    using Error::Error;
};

// K must be a multiple of 8 in [16, 256]; throws Error otherwise.
void validate_k(unsigned k);

// SHA-256 truncated to the first k bits (k/8 bytes).
Bytes hash_k(unsigned k, ByteView data);

// Private key: K pairs of K-bit numbers, stored pair-major
// (x_1,0 x_1,1 x_2,0 x_2,1 ...); 2*K*K/8 bytes total.
struct LamportPrivateKey {
    unsigned k = 0;
    Bytes elements;
};

// Public key: same layout, each element hashed with h_K.
struct LamportPublicKey {
    unsigned k = 0;
    Bytes elements;

    bool operator==(const LamportPublicKey&) const = default;
};

// K revealed elements, one per message bit; K*K/8 bytes.
struct LamportSignature {
    unsigned k = 0;
    Bytes revealed;
};

// u16be K followed by all 2K elements in pair order.
Bytes serialize_public_key(const LamportPublicKey& pk);
LamportPublicKey parse_public_key(ByteView data); // throws ParseError

LamportPublicKey derive_public_key(const LamportPrivateKey& sk);

// Deterministic keypair for leaf i (1-based) from the master seed.
// Expansion: leaf_secret = SHA-256(lp64(seed) || u32be i); element (b, j) =
// h_K(lp64(leaf_secret) || u8 b || u32be j) for pair j = 1..K, b in {0,1}.
// Throws IndexOutOfRange for i = 0.
std::pair<LamportPrivateKey, LamportPublicKey> derive_leaf_keypair(ByteView seed,
                                                                   std::uint32_t i,
                                                                   unsigned k);

LamportSignature lamport_sign(const LamportPrivateKey& sk, ByteView message);

// True iff h_K(revealed_i) matches the public-key element selected by bit i of
// h_K(message) for every i. Throws MalformedSignature on wrong element count.
bool lamport_verify(const LamportPublicKey& pk, ByteView message,
                    const LamportSignature& sig);

enum class Side : std::uint8_t {
    Left = 0,  // sibling sits to the left of the current node
    Right = 1, // sibling sits to the right
};

struct AuthPathNode {
    Side side = Side::Left;
    Bytes hash; // k/8 bytes
};

// log2(N) sibling hashes ordered leaf-to-root.
struct AuthPath {
    std::vector<AuthPathNode> nodes;
};

// Leaf hash = h_K(serialize_public_key(PK_i)); parent = h_K(left || right).
Bytes merkle_root(const std::vector<LamportPublicKey>& leaves); // throws NotPowerOfTwo

// Path for leaf i (1-based). Throws NotPowerOfTwo / IndexOutOfRange.
AuthPath auth_path(const std::vector<LamportPublicKey>& leaves, std::uint32_t i);

// Full verification: the Lamport signature must check out against pk, and
// folding h_K(serialize(pk)) up the path must reproduce root. Each path node's
// side must agree with the bits of (i-1), so a signature cannot be replayed
// under a different claimed leaf index. Structural defects (wrong hash widths,
// bad path length) throw MalformedPath.
bool merkle_verify(ByteView root, ByteView message, const LamportSignature& sig,
                   const LamportPublicKey& pk, const AuthPath& path, std::uint32_t i);

// Bytes of signature material transmitted per signed message: the K revealed
// elements plus log2(N) path hashes ((K*K + K*log2 N) / 8).
std::size_t merkle_signature_size(unsigned k, std::uint32_t n);

// Owner-side key material: seed, parameters, and the cached hash tree. Leaf
// keypairs are re-derived on demand; the tree (about 2*N hashes) is kept so
// auth paths are O(log N). Construction cost is one pass over all N leaves.
class MerkleKeyMaterial {
public:
    MerkleKeyMaterial(Bytes seed, std::uint32_t n, unsigned k);

    // Fresh random 32-byte seed from the OS entropy source.
    static MerkleKeyMaterial generate(std::uint32_t n, unsigned k);

    const Bytes& root() const { return root_; }
    std::uint32_t leaf_count() const { return n_; }
    unsigned k() const { return k_; }
    const Bytes& seed() const { return seed_; }

    std::pair<LamportPrivateKey, LamportPublicKey> leaf_keypair(std::uint32_t i) const;
    AuthPath leaf_auth_path(std::uint32_t i) const;

    // Binary file: "HADESOTS1" || u16be K || u32be N || u16be |seed| || seed.
    // Loading re-derives the tree from the seed.
    Bytes serialize_seed_file() const;
    static MerkleKeyMaterial from_seed_file(ByteView data);
    void save_file(const std::string& path) const;
    static MerkleKeyMaterial load_file(const std::string& path);

private:
    Bytes seed_;
    std::uint32_t n_ = 0;
    unsigned k_ = 0;
    // levels_[0] = N leaf hashes, each k/8 bytes, stored flat; levels_.back()
    // holds the single root.
    std::vector<Bytes> levels_;
    Bytes root_;
};

} // namespace hades::ots
