#include "hades/protocol.hpp"

#include <algorithm>
#include <cstring>

namespace hades {

Bytes encode_frame(const Frame& f) {
    if (f.payload.size() + 2 > kMaxFrameBody) throw MalformedFrameError("frame too large");
    Bytes out;
    out.reserve(4 + 2 + f.payload.size());
    put_u32be(out, static_cast<std::uint32_t>(2 + f.payload.size()));
    put_u8(out, kProtocolVersion);
    put_u8(out, static_cast<std::uint8_t>(f.type));
    put_bytes(out, f.payload);
    return out;
}

void FrameDecoder::feed(ByteView data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<Frame> FrameDecoder::next() {
    if (buf_.size() < 4) return std::nullopt;
    std::uint32_t body_len = 0;
    for (int i = 0; i < 4; ++i) body_len = (body_len << 8) | buf_[i];
    if (body_len < 2) throw MalformedFrameError("frame body shorter than header");
    if (body_len > kMaxFrameBody)
        throw MalformedFrameError("frame body exceeds limit: " + std::to_string(body_len));
    if (buf_.size() < 4 + static_cast<std::size_t>(body_len)) return std::nullopt;

    std::uint8_t version = buf_[4];
    std::uint8_t type = buf_[5];
    if (version != kProtocolVersion)
        throw MalformedFrameError("unsupported protocol version " + std::to_string(version));
    if (type < 1 || type > 5)
        throw MalformedFrameError("unknown message type " + std::to_string(type));

    Frame f;
    f.type = static_cast<MsgType>(type);
    f.payload.assign(buf_.begin() + 6, buf_.begin() + 4 + body_len);
    buf_.erase(buf_.begin(), buf_.begin() + 4 + body_len);
    return f;
}

Bytes encode_command_body(const Command& cmd) {
    Bytes out;
    put_u8(out, static_cast<std::uint8_t>(cmd.code));
    if (cmd.code == CommandCode::AddEntry) {
        put_bytes(out, ByteView(cmd.entry_id));
        put_u8(out, static_cast<std::uint8_t>(cmd.entry_kind));
        put_lp32(out, as_bytes(cmd.label));
    } else if (cmd.code == CommandCode::RemoveEntry) {
        put_bytes(out, ByteView(cmd.entry_id));
    }
    return out;
}

Command decode_command_body(ByteView body) {
    ByteReader r{body};
    std::uint8_t code = r.u8();
    if (code < 1 || code > 6) throw ParseError("unknown command code " + std::to_string(code));
    Command cmd;
    cmd.code = static_cast<CommandCode>(code);
    if (cmd.code == CommandCode::AddEntry) {
        auto id = r.bytes(32);
        std::copy(id.begin(), id.end(), cmd.entry_id.begin());
        std::uint8_t kind = r.u8();
        if (kind > 3) throw ParseError("unknown entry kind " + std::to_string(kind));
        cmd.entry_kind = static_cast<EntryKind>(kind);
        auto label = r.lp32();
        cmd.label.assign(label.begin(), label.end());
    } else if (cmd.code == CommandCode::RemoveEntry) {
        auto id = r.bytes(32);
        std::copy(id.begin(), id.end(), cmd.entry_id.begin());
    }
    r.expect_done();
    return cmd;
}

Bytes encode_signed_command(const SignedCommand& sc) {
    Bytes path_bytes;
    if (sc.path.nodes.size() > 255) throw MalformedFrameError("auth path too deep");
    put_u8(path_bytes, static_cast<std::uint8_t>(sc.path.nodes.size()));
    for (const auto& node : sc.path.nodes) {
        put_u8(path_bytes, static_cast<std::uint8_t>(node.side));
        put_bytes(path_bytes, node.hash);
    }
    Bytes out;
    put_u32be(out, sc.leaf_index);
    put_lp32(out, encode_command_body(sc.command));
    put_lp32(out, ots::serialize_public_key(sc.pk));
    put_lp32(out, sc.sig.revealed);
    put_lp32(out, path_bytes);
    return out;
}

SignedCommand decode_signed_command(ByteView payload) {
    ByteReader r{payload};
    SignedCommand sc;
    sc.leaf_index = r.u32be();
    sc.command = decode_command_body(r.lp32());
    sc.pk = ots::parse_public_key(r.lp32());
    auto revealed = r.lp32();
    sc.sig.k = sc.pk.k;
    if (revealed.size() != static_cast<std::size_t>(sc.pk.k) * (sc.pk.k / 8))
        throw ParseError("signature length does not match K");
    sc.sig.revealed.assign(revealed.begin(), revealed.end());

    ByteReader pr{r.lp32()};
    std::uint8_t depth = pr.u8();
    const std::size_t kb = sc.pk.k / 8;
    for (std::uint8_t d = 0; d < depth; ++d) {
        std::uint8_t side = pr.u8();
        if (side > 1) throw ParseError("auth path side must be 0 or 1");
        ots::AuthPathNode node;
        node.side = static_cast<ots::Side>(side);
        auto h = pr.bytes(kb);
        node.hash.assign(h.begin(), h.end());
        sc.path.nodes.push_back(std::move(node));
    }
    pr.expect_done();
    r.expect_done();
    return sc;
}

SignedCommand owner_sign_command(const ots::MerkleKeyMaterial& km, std::uint32_t leaf_index,
                                 const Command& cmd) {
    auto [sk, pk] = km.leaf_keypair(leaf_index);
    SignedCommand sc;
    sc.leaf_index = leaf_index;
    sc.command = cmd;
    sc.pk = std::move(pk);
    sc.sig = ots::lamport_sign(sk, encode_command_body(cmd));
    sc.path = km.leaf_auth_path(leaf_index);
    return sc;
}

const char* verify_status_name(VerifyStatus s) {
    switch (s) {
    case VerifyStatus::Accepted: return "accepted";
    case VerifyStatus::BadSignature: return "bad-signature";
    case VerifyStatus::ReplayRejected: return "replay-rejected";
    case VerifyStatus::MalformedFrame: return "malformed-frame";
    }
    return "?";
}

CommandVerifier::CommandVerifier(Bytes master_root, unsigned k, std::uint32_t leaf_count)
    : root_(std::move(master_root)), k_(k), n_(leaf_count) {
    ots::validate_k(k_);
    if (root_.size() != k_ / 8) throw Error("master root width does not match K");
    if (n_ == 0) throw Error("leaf count must be positive");
}

VerifyResult CommandVerifier::verify_and_accept(const SignedCommand& sc) {
    if (sc.leaf_index == 0 || sc.leaf_index > n_)
        return {VerifyStatus::BadSignature, counter_,
                "leaf index " + std::to_string(sc.leaf_index) + " outside 1.." +
                    std::to_string(n_)};
    if (sc.leaf_index <= counter_)
        return {VerifyStatus::ReplayRejected, counter_,
                "leaf index " + std::to_string(sc.leaf_index) +
                    " not greater than replay counter " + std::to_string(counter_)};
    if (sc.pk.k != k_)
        return {VerifyStatus::BadSignature, counter_, "public key K mismatch"};
    bool ok;
    try {
        ok = ots::merkle_verify(root_, encode_command_body(sc.command), sc.sig, sc.pk,
                                sc.path, sc.leaf_index);
    } catch (const Error& e) {
        return {VerifyStatus::BadSignature, counter_, e.what()};
    }
    if (!ok) return {VerifyStatus::BadSignature, counter_, "signature verification failed"};
    counter_ = sc.leaf_index;
    return {VerifyStatus::Accepted, counter_, "command accepted"};
}

Bytes encode_response(const Response& r) {
    Bytes out;
    put_u8(out, static_cast<std::uint8_t>(r.status));
    put_u32be(out, r.counter);
    put_lp32(out, as_bytes(r.detail));
    return out;
}

Response decode_response(ByteView payload) {
    ByteReader r{payload};
    Response resp;
    std::uint8_t status = r.u8();
    if (status > 3) throw ParseError("unknown response status");
    resp.status = static_cast<VerifyStatus>(status);
    resp.counter = r.u32be();
    auto detail = r.lp32();
    resp.detail.assign(detail.begin(), detail.end());
    r.expect_done();
    return resp;
}

Bytes encode_report(const Report& rep, std::uint32_t dropped_total) {
    Bytes out;
    put_u64be(out, rep.seq);
    put_bytes(out, ByteView(rep.entry_id));
    put_u8(out, static_cast<std::uint8_t>(rep.kind));
    put_u8(out, static_cast<std::uint8_t>(rep.code));
    put_u32be(out, dropped_total);
    put_lp32(out, as_bytes(rep.origin));
    return out;
}

WireReport decode_report(ByteView payload) {
    ByteReader r{payload};
    WireReport wr;
    wr.report.seq = r.u64be();
    auto id = r.bytes(32);
    std::copy(id.begin(), id.end(), wr.report.entry_id.begin());
    std::uint8_t kind = r.u8();
    if (kind > 3) throw ParseError("unknown entry kind in report");
    wr.report.kind = static_cast<EntryKind>(kind);
    std::uint8_t code = r.u8();
    if (code > 2) throw ParseError("unknown deny code in report");
    wr.report.code = static_cast<DenyCode>(code);
    wr.dropped_total = r.u32be();
    auto origin = r.lp32();
    wr.report.origin.assign(origin.begin(), origin.end());
    r.expect_done();
    return wr;
}

Bytes encode_status(const StatusSnapshot& s) {
    Bytes out;
    put_u8(out, static_cast<std::uint8_t>(s.mode));
    put_u32be(out, s.replay_counter);
    put_u64be(out, s.whitelist_count);
    put_u64be(out, s.events_processed);
    put_u32be(out, s.reports_dropped);
    return out;
}

StatusSnapshot decode_status(ByteView payload) {
    ByteReader r{payload};
    StatusSnapshot s;
    std::uint8_t mode = r.u8();
    if (mode > 2) throw ParseError("unknown mode in status");
    s.mode = static_cast<Mode>(mode);
    s.replay_counter = r.u32be();
    s.whitelist_count = r.u64be();
    s.events_processed = r.u64be();
    s.reports_dropped = r.u32be();
    r.expect_done();
    return s;
}

} // namespace hades
