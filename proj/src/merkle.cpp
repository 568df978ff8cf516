#include <bit>
#include <cstring>
#include <fstream>
#include <random>

#include "hades/ots.hpp"
#include "hades/sha256.hpp"

namespace hades::ots {

namespace {

constexpr std::string_view kSeedMagic = "HADESOTS1";

// Hashes `count` equal-length messages laid out back-to-back and truncates
// each digest to kb bytes, returning a flat kb-per-entry buffer.
Bytes batch_hash_flat(const std::uint8_t* base, std::size_t msg_len, std::size_t count,
                      std::size_t kb) {
    std::vector<std::uint8_t> full(count * 32);
    sha256::digest_batch_strided(base, msg_len, msg_len, count, full.data());
    Bytes out;
    out.reserve(count * kb);
    for (std::size_t i = 0; i < count; ++i)
        out.insert(out.end(), full.data() + 32 * i, full.data() + 32 * i + kb);
    return out;
}

// Builds all tree levels from the flat leaf-hash buffer. levels[0] = leaves,
// levels.back() = root (single hash).
std::vector<Bytes> build_levels(Bytes leaf_hashes, std::size_t n, std::size_t kb) {
    std::vector<Bytes> levels;
    levels.push_back(std::move(leaf_hashes));
    while (n > 1) {
        // Each parent hashes the 2*kb bytes of its children, which already sit
        // adjacent in the flat level buffer.
        n /= 2;
        levels.push_back(batch_hash_flat(levels.back().data(), 2 * kb, n, kb));
    }
    return levels;
}

void check_leaf_list(const std::vector<LamportPublicKey>& leaves) {
    if (leaves.empty() || !std::has_single_bit(leaves.size()))
        throw NotPowerOfTwo("leaf count must be a power of two, got " +
                            std::to_string(leaves.size()));
    for (const auto& pk : leaves)
        if (pk.k != leaves.front().k)
            throw Error("leaf public keys disagree on K");
}

Bytes leaf_hashes_of(const std::vector<LamportPublicKey>& leaves) {
    const std::size_t kb = leaves.front().k / 8;
    Bytes out;
    out.reserve(leaves.size() * kb);
    for (const auto& pk : leaves) {
        Bytes h = hash_k(pk.k, serialize_public_key(pk));
        out.insert(out.end(), h.begin(), h.end());
    }
    return out;
}

} // namespace

Bytes merkle_root(const std::vector<LamportPublicKey>& leaves) {
    check_leaf_list(leaves);
    const std::size_t kb = leaves.front().k / 8;
    auto levels = build_levels(leaf_hashes_of(leaves), leaves.size(), kb);
    return levels.back();
}

AuthPath auth_path(const std::vector<LamportPublicKey>& leaves, std::uint32_t i) {
    check_leaf_list(leaves);
    if (i == 0 || i > leaves.size())
        throw IndexOutOfRange("leaf index " + std::to_string(i) + " outside 1.." +
                              std::to_string(leaves.size()));
    const std::size_t kb = leaves.front().k / 8;
    auto levels = build_levels(leaf_hashes_of(leaves), leaves.size(), kb);

    AuthPath path;
    std::size_t pos = i - 1;
    for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
        std::size_t sib = pos ^ 1;
        AuthPathNode node;
        node.side = (sib > pos) ? Side::Right : Side::Left;
        node.hash.assign(levels[l].data() + sib * kb, levels[l].data() + (sib + 1) * kb);
        path.nodes.push_back(std::move(node));
        pos /= 2;
    }
    return path;
}

bool merkle_verify(ByteView root, ByteView message, const LamportSignature& sig,
                   const LamportPublicKey& pk, const AuthPath& path, std::uint32_t i) {
    validate_k(pk.k);
    const std::size_t kb = pk.k / 8;
    if (root.size() != kb) throw MalformedPath("root hash has wrong width");
    if (i == 0) throw IndexOutOfRange("leaf indices are 1-based");
    if (path.nodes.size() >= 32 || ((i - 1) >> path.nodes.size()) != 0)
        throw MalformedPath("leaf index does not fit the path depth");
    for (const auto& node : path.nodes)
        if (node.hash.size() != kb) throw MalformedPath("path node hash has wrong width");

    if (!lamport_verify(pk, message, sig)) return false;

    Bytes cur = hash_k(pk.k, serialize_public_key(pk));
    std::size_t pos = i - 1;
    for (const auto& node : path.nodes) {
        // The node's claimed side must match the leaf index bit; otherwise a
        // valid signature could be replayed under a different index.
        Side expected = (pos & 1) ? Side::Left : Side::Right;
        if (node.side != expected) return false;
        Bytes msg;
        msg.reserve(2 * kb);
        if (node.side == Side::Left) {
            put_bytes(msg, node.hash);
            put_bytes(msg, cur);
        } else {
            put_bytes(msg, cur);
            put_bytes(msg, node.hash);
        }
        cur = hash_k(pk.k, msg);
        pos /= 2;
    }
    return ByteView(cur).size() == root.size() &&
           std::memcmp(cur.data(), root.data(), kb) == 0;
}

std::size_t merkle_signature_size(unsigned k, std::uint32_t n) {
    validate_k(k);
    if (n == 0 || !std::has_single_bit(n)) throw NotPowerOfTwo("N must be a power of two");
    return (static_cast<std::size_t>(k) * k + k * std::bit_width(n - 1)) / 8;
}

MerkleKeyMaterial::MerkleKeyMaterial(Bytes seed, std::uint32_t n, unsigned k)
    : seed_(std::move(seed)), n_(n), k_(k) {
    validate_k(k_);
    if (seed_.empty()) throw Error("seed must be non-empty");
    if (n_ == 0 || !std::has_single_bit(n_))
        throw NotPowerOfTwo("N must be a power of two, got " + std::to_string(n_));

    const std::size_t kb = k_ / 8;
    Bytes leaf_hashes;
    leaf_hashes.reserve(static_cast<std::size_t>(n_) * kb);
    // Serialized public keys all share one length, so leaf hashing batches
    // cleanly; derive in chunks to bound memory.
    const std::size_t chunk = 8;
    std::vector<std::uint8_t> serialized;
    for (std::uint32_t base = 1; base <= n_; base += chunk) {
        std::size_t got = std::min<std::size_t>(chunk, n_ - base + 1);
        serialized.clear();
        for (std::size_t j = 0; j < got; ++j) {
            auto [sk, pk] = derive_leaf_keypair(seed_, base + static_cast<std::uint32_t>(j), k_);
            Bytes s = serialize_public_key(pk);
            serialized.insert(serialized.end(), s.begin(), s.end());
        }
        std::size_t one = 2 + 2u * k_ * kb;
        Bytes hashed = batch_hash_flat(serialized.data(), one, got, kb);
        leaf_hashes.insert(leaf_hashes.end(), hashed.begin(), hashed.end());
    }
    levels_ = build_levels(std::move(leaf_hashes), n_, kb);
    root_ = levels_.back();
}

MerkleKeyMaterial MerkleKeyMaterial::generate(std::uint32_t n, unsigned k) {
    Bytes seed(32);
    std::random_device rd;
    for (auto& b : seed) b = static_cast<std::uint8_t>(rd());
    return MerkleKeyMaterial(std::move(seed), n, k);
}

std::pair<LamportPrivateKey, LamportPublicKey>
MerkleKeyMaterial::leaf_keypair(std::uint32_t i) const {
    if (i == 0 || i > n_)
        throw IndexOutOfRange("leaf index " + std::to_string(i) + " outside 1.." +
                              std::to_string(n_));
    return derive_leaf_keypair(seed_, i, k_);
}

AuthPath MerkleKeyMaterial::leaf_auth_path(std::uint32_t i) const {
    if (i == 0 || i > n_)
        throw IndexOutOfRange("leaf index " + std::to_string(i) + " outside 1.." +
                              std::to_string(n_));
    const std::size_t kb = k_ / 8;
    AuthPath path;
    std::size_t pos = i - 1;
    for (std::size_t l = 0; l + 1 < levels_.size(); ++l) {
        std::size_t sib = pos ^ 1;
        AuthPathNode node;
        node.side = (sib > pos) ? Side::Right : Side::Left;
        node.hash.assign(levels_[l].data() + sib * kb, levels_[l].data() + (sib + 1) * kb);
        path.nodes.push_back(std::move(node));
        pos /= 2;
    }
    return path;
}

Bytes MerkleKeyMaterial::serialize_seed_file() const {
    Bytes out;
    put_bytes(out, as_bytes(kSeedMagic));
    put_u16be(out, static_cast<std::uint16_t>(k_));
    put_u32be(out, n_);
    put_u16be(out, static_cast<std::uint16_t>(seed_.size()));
    put_bytes(out, seed_);
    return out;
}

MerkleKeyMaterial MerkleKeyMaterial::from_seed_file(ByteView data) {
    ByteReader r{data};
    auto magic = r.bytes(kSeedMagic.size());
    if (std::string_view(reinterpret_cast<const char*>(magic.data()), magic.size()) !=
        kSeedMagic)
        throw ParseError("bad key file magic");
    unsigned k = r.u16be();
    std::uint32_t n = r.u32be();
    std::uint16_t seed_len = r.u16be();
    auto seed = r.bytes(seed_len);
    r.expect_done();
    return MerkleKeyMaterial(Bytes(seed.begin(), seed.end()), n, k);
}

void MerkleKeyMaterial::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open key file for writing: " + path);
    Bytes data = serialize_seed_file();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw Error("short write to key file: " + path);
}

MerkleKeyMaterial MerkleKeyMaterial::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open key file: " + path);
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_seed_file(data);
}

} // namespace hades::ots
