#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hades/bytes.hpp"
#include "hades/engine.hpp"
#include "hades/error.hpp"
#include "hades/ots.hpp"

// Owner <-> device wire protocol. Framing: u32be body length, then
// version(u8) || msg_type(u8) || payload. Payload fields appear in fixed
// order, length-prefixed where variable. Verification failures are protocol
// RESULTS (status codes in a response frame), never exceptions; exceptions are
// reserved for malformed bytes.
namespace hades {

class MalformedFrameError : public Error {
public:
    using Error::Error;
};

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxFrameBody = 1 << 20; // 1 MiB

enum class MsgType : std::uint8_t {
    Command = 1,       // owner -> device: signed command
    Response = 2,      // device -> owner: accept/reject status
    Report = 3,        // device -> owner: denial notification
    StatusRequest = 4, // owner -> device: ask for engine status
    Status = 5,        // device -> owner: unauthenticated status snapshot
};

struct Frame {
    MsgType type = MsgType::Command;
    Bytes payload;

    bool operator==(const Frame&) const = default;
};

Bytes encode_frame(const Frame& f);

// Incremental decoder over a byte stream; feed() arbitrary chunks, next()
// yields complete frames. Throws MalformedFrameError on oversized length,
// unknown version, or unknown message type.
class FrameDecoder {
public:
    void feed(ByteView data);
    std::optional<Frame> next();

    // True when no partially received frame is pending.
    bool empty() const { return buf_.empty(); }

private:
    Bytes buf_;
};

// Command body: code(u8), then for AddEntry id(32) || kind(u8) || lp32 label,
// for RemoveEntry id(32). This is also the byte string the owner signs.
Bytes encode_command_body(const Command& cmd);
Command decode_command_body(ByteView body); // throws ParseError

// A command plus everything needed to authenticate it: the leaf index, the
// leaf public key, the Lamport signature over the command body, and the
// authentication path to the master root.
struct SignedCommand {
    std::uint32_t leaf_index = 0;
    Command command;
    ots::LamportPublicKey pk;
    ots::LamportSignature sig;
    ots::AuthPath path;
};

// COMMAND frame payload:
// u32be leaf_index || lp32 command_body || lp32 serialized_pk ||
// lp32 revealed_elements || lp32 (u8 depth || {u8 side || k/8 hash} * depth).
Bytes encode_signed_command(const SignedCommand& sc);
SignedCommand decode_signed_command(ByteView payload); // throws ParseError

// Owner side: derives the leaf keypair, signs the encoded command, attaches
// the auth path. Throws ots::IndexOutOfRange for an invalid leaf.
SignedCommand owner_sign_command(const ots::MerkleKeyMaterial& km, std::uint32_t leaf_index,
                                 const Command& cmd);

enum class VerifyStatus : std::uint8_t {
    Accepted = 0,
    BadSignature = 1,
    ReplayRejected = 2,
    MalformedFrame = 3,
};

const char* verify_status_name(VerifyStatus s);

struct VerifyResult {
    VerifyStatus status = VerifyStatus::BadSignature;
    std::uint32_t counter = 0; // replay counter after the attempt
    std::string detail;
};

// Device-side verifier: master root + strictly-greater replay rule. The
// counter advances exactly when a command is accepted; check-and-advance is a
// single non-reentrant step (callers serialize).
class CommandVerifier {
public:
    CommandVerifier(Bytes master_root, unsigned k, std::uint32_t leaf_count);

    // Accepts iff the leaf index is strictly greater than the replay counter
    // AND the Merkle-verified Lamport signature checks out against the root.
    VerifyResult verify_and_accept(const SignedCommand& sc);

    std::uint32_t replay_counter() const { return counter_; }
    unsigned k() const { return k_; }
    std::uint32_t leaf_count() const { return n_; }
    const Bytes& root() const { return root_; }

private:
    Bytes root_;
    unsigned k_ = 0;
    std::uint32_t n_ = 0;
    std::uint32_t counter_ = 0;
};

// RESPONSE payload: status(u8) || u32be counter || lp32 detail.
struct Response {
    VerifyStatus status = VerifyStatus::Accepted;
    std::uint32_t counter = 0;
    std::string detail;

    bool operator==(const Response&) const = default;
};

Bytes encode_response(const Response& r);
Response decode_response(ByteView payload);

// REPORT payload: u64be seq || id(32) || kind(u8) || code(u8) ||
// u32be dropped_total || lp32 origin.
struct WireReport {
    Report report;
    std::uint32_t dropped_total = 0;

    bool operator==(const WireReport&) const = default;
};

Bytes encode_report(const Report& r, std::uint32_t dropped_total);
WireReport decode_report(ByteView payload);

// STATUS payload: mode(u8) || u32be replay_counter || u64be whitelist_count ||
// u64be events_processed || u32be reports_dropped.
struct StatusSnapshot {
    Mode mode = Mode::Profiling;
    std::uint32_t replay_counter = 0;
    std::uint64_t whitelist_count = 0;
    std::uint64_t events_processed = 0;
    std::uint32_t reports_dropped = 0;

    bool operator==(const StatusSnapshot&) const = default;
};

Bytes encode_status(const StatusSnapshot& s);
StatusSnapshot decode_status(ByteView payload);

} // namespace hades
