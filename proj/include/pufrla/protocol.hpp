#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pufrla/bitstring.hpp"
#include "pufrla/ecc.hpp"
#include "pufrla/prng.hpp"
#include "pufrla/puf.hpp"
#include "pufrla/store.hpp"

namespace pufrla {

struct ProtocolConfig {
    BitString seed;                  // 128-bit SEED for PRNG_1
    std::uint64_t m = 9999;          // last RN ordinal, odd
    std::uint64_t counter1_init = 1;
    std::uint64_t counter2_init = 2;
    std::uint64_t const1 = 3;
    std::uint64_t const2 = 5;
    std::uint64_t tau_ms = 2000;     // response deadline
    std::uint32_t omega = 10;        // consecutive-failure lockout threshold
    std::size_t nonce_len = 128;
    std::size_t response_len = 127;
    BitString admin_token;           // 128-bit unlock token

    static ProtocolConfig defaults();
    void validate() const;
    std::uint64_t pairs() const { return (m + 1) / 2; }
};

// ---------------------------------------------------------------------------
// Wire messages of the authentication cycle. Every frame is
//   u32 payload length (big-endian) || u8 type tag || fixed-width fields.
// ---------------------------------------------------------------------------

enum class MessageType : std::uint8_t {
    kInit = 0x01,
    kAuth1 = 0x02,
    kNonce = 0x03,
    kChallenge = 0x04,
    kResponse = 0x05,
    kResult = 0x06,
    kUnlock = 0x07,
    kError = 0x08,
};

enum ErrorCode : std::uint16_t {
    kErrLocked = 0x0001,
    kErrBadToken = 0x0002,
    kErrProtocol = 0x0003,
};

struct InitMsg {
    bool operator==(const InitMsg&) const = default;
};
struct Auth1Msg {
    std::uint64_t id;
    BitString n_even_shuffled;  // 128 bits
    BitString n_d;              // 128 bits
    bool operator==(const Auth1Msg&) const = default;
};
struct NonceMsg {
    BitString n_s;  // 128 bits
    bool operator==(const NonceMsg&) const = default;
};
struct ChallengeMsg {
    BitString x;  // 128 bits, S ^ n_ds ^ n_ss
    bool operator==(const ChallengeMsg&) const = default;
};
struct ResponseMsg {
    BitString r_shuffle;  // 127 bits (zero-padded on the wire)
    bool operator==(const ResponseMsg&) const = default;
};
struct ResultMsg {
    bool accept;
    bool operator==(const ResultMsg&) const = default;
};
struct UnlockMsg {
    BitString token;  // 128 bits
    bool operator==(const UnlockMsg&) const = default;
};
struct ErrorMsg {
    std::uint16_t code;
    bool operator==(const ErrorMsg&) const = default;
};

using Message = std::variant<InitMsg, Auth1Msg, NonceMsg, ChallengeMsg, ResponseMsg, ResultMsg,
                             UnlockMsg, ErrorMsg>;

class FrameError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> encode_frame(const Message& msg);
Message decode_frame(std::span<const std::uint8_t> frame);  // throws FrameError
MessageType message_type(const Message& msg);

// ---------------------------------------------------------------------------
// Enrollment (secure environment)
// ---------------------------------------------------------------------------

// Persistent device-side protocol state. pair_index counts rounds ever
// started; the effective CRP pair is pair_index mod pairs, and the counters
// always equal counterX_init + p_eff * constX (mod 2^64).
struct DeviceState {
    std::uint64_t id = 0;
    std::uint64_t pair_index = 0;
    std::uint64_t counter1 = 0;
    std::uint64_t counter2 = 0;
    std::uint64_t fail_count = 0;
    bool locked = false;

    static constexpr std::size_t kFileBytes = 41;  // id,pair,c1,c2,fail (8 each) + locked
    void save(const std::string& path) const;
    static DeviceState load(const std::string& path);

    bool operator==(const DeviceState&) const = default;
};

// Enrolls one device: (m+1)/2 database rows keyed by
// the PRF of the shuffled even RN, each sealing Counter_2 || S || Rs || Help.
// The helper-data messages come from a stream derived from (seed, device_id),
// so the pre-seal records are a pure function of the inputs; seal nonces come
// from seal_rng.
DeviceState enroll(const ProtocolConfig& config, const PufInstance& puf,
                   const MasterSecret& master_secret, std::uint64_t device_id,
                   const BchCode& code, Database& db, Prng64& seal_rng);

// ---------------------------------------------------------------------------
// Device state machine
// ---------------------------------------------------------------------------

// One physical device: protocol state plus the stream-authentication block
// that gates the PUF behind the shuffle comparator and the lockout counter.
class Device {
public:
    Device(ProtocolConfig config, const PufInstance& puf, DeviceState state,
           Prng64 nonce_rng, Prng64 noise_rng);

    // INIT -> AUTH1 (or ERROR when locked).
    Message on_init(std::uint64_t now_ms);

    // Buffers the server nonce; the round completes on the challenge.
    std::optional<Message> on_nonce(const NonceMsg& msg, std::uint64_t now_ms);

    // Comparator step: deshuffles the challenge and invokes the PUF only on
    // an exact match. Returns RESPONSE on success, nullopt on a voided round.
    std::optional<Message> on_challenge(const ChallengeMsg& msg, std::uint64_t now_ms);

    Message on_unlock(const UnlockMsg& msg);

    // Frame pump used by transports: dispatches per type, enforcing the
    // locked contract (every inbound frame except UNLOCK answers ERROR).
    std::vector<Message> on_message(const Message& msg, std::uint64_t now_ms);

    const DeviceState& state() const { return state_; }
    const PufInstance& puf() const { return puf_; }
    const ProtocolConfig& config() const { return config_; }

private:
    enum class Phase { kIdle, kAwaitNonce, kAwaitChallenge };

    void void_round();    // failed event: advance and count toward omega
    void finish_round();  // comparator success: advance and clear failures
    void advance_pair();

    ProtocolConfig config_;
    const PufInstance& puf_;
    DeviceState state_;
    Prng64 nonce_rng_;
    Prng64 noise_rng_;
    RnStream stream_;

    Phase phase_ = Phase::kIdle;
    BitString n_ds_;
    BitString n_even_;
    std::optional<NonceMsg> pending_nonce_;
    std::uint64_t deadline_ms_ = 0;
};

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

// Per-round server session. Holds only what the database row reveals
// (Counter_2, S, Rs, Help) and the session nonce; Counter_1 never reaches
// the server.
class ServerSession {
public:
    enum class Phase { kAwaitAuth1, kAwaitResponse, kDone };

    ServerSession(const Database& db, const MasterSecret& ms, const BchCode& code,
                  Prng64& nonce_rng);

    Message start();  // INIT

    // AUTH1 -> {NONCE, CHALLENGE} on success, {RESULT(reject)} otherwise.
    std::vector<Message> on_auth1(const Auth1Msg& msg);

    // RESPONSE -> RESULT.
    Message on_response(const ResponseMsg& msg);

    std::vector<Message> on_message(const Message& msg);

    Phase phase() const { return phase_; }
    const BitString& n_s() const { return n_s_; }

private:
    const Database& db_;
    KeyTriple keys_;
    const BchCode& code_;
    Prng64& nonce_rng_;

    Phase phase_ = Phase::kAwaitAuth1;
    std::uint64_t device_id_ = 0;
    BitString n_s_;
    RecordPlain record_;
    BitString n_ds_;
    BitString n_ss_;
};

// Draws 128-bit values from rng until balance_check passes.
BitString draw_balanced_nonce(Prng64& rng);

}  // namespace pufrla
