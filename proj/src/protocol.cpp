#include "pufrla/protocol.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "pufrla/shuffler.hpp"

namespace pufrla {

namespace {

constexpr std::uint64_t kHelperRngSalt = 0x68656c7065726d73ull;  // "helperms"
constexpr std::string_view kDefaultAdminTokenHex = "505546524c412d554e4c4f434b2d3031";

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_bits(std::vector<std::uint8_t>& out, const BitString& b) {
    auto bytes = b.to_bytes();
    out.insert(out.end(), bytes.begin(), bytes.end());
}

std::uint64_t read_u64(std::span<const std::uint8_t> b) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
    return v;
}

}  // namespace

ProtocolConfig ProtocolConfig::defaults() {
    ProtocolConfig cfg;
    cfg.seed = default_seed();
    cfg.admin_token = BitString::from_hex(kDefaultAdminTokenHex, 128);
    return cfg;
}

void ProtocolConfig::validate() const {
    if (seed.size() != 128) throw std::invalid_argument("ProtocolConfig: seed must be 128 bits");
    if (m % 2 == 0) throw std::invalid_argument("ProtocolConfig: m must be odd");
    if (const1 < 1 || const2 < 1)
        throw std::invalid_argument("ProtocolConfig: counter increments must be >= 1");
    if (omega < 1) throw std::invalid_argument("ProtocolConfig: omega must be >= 1");
    if (nonce_len != 128)
        throw std::invalid_argument("ProtocolConfig: wire format fixes nonce_len at 128");
    if (response_len != 127)
        throw std::invalid_argument("ProtocolConfig: wire format fixes response_len at 127");
    if (admin_token.size() != 128)
        throw std::invalid_argument("ProtocolConfig: admin token must be 128 bits");
}

// ---------------------------------------------------------------------------
// Wire codec
// ---------------------------------------------------------------------------

MessageType message_type(const Message& msg) {
    return std::visit(
        [](const auto& m) -> MessageType {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, InitMsg>) return MessageType::kInit;
            if constexpr (std::is_same_v<T, Auth1Msg>) return MessageType::kAuth1;
            if constexpr (std::is_same_v<T, NonceMsg>) return MessageType::kNonce;
            if constexpr (std::is_same_v<T, ChallengeMsg>) return MessageType::kChallenge;
            if constexpr (std::is_same_v<T, ResponseMsg>) return MessageType::kResponse;
            if constexpr (std::is_same_v<T, ResultMsg>) return MessageType::kResult;
            if constexpr (std::is_same_v<T, UnlockMsg>) return MessageType::kUnlock;
            if constexpr (std::is_same_v<T, ErrorMsg>) return MessageType::kError;
        },
        msg);
}

std::vector<std::uint8_t> encode_frame(const Message& msg) {
    std::vector<std::uint8_t> payload;
    payload.push_back(static_cast<std::uint8_t>(message_type(msg)));
    std::visit(
        [&payload](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Auth1Msg>) {
                put_u64(payload, m.id);
                put_bits(payload, m.n_even_shuffled);
                put_bits(payload, m.n_d);
            } else if constexpr (std::is_same_v<T, NonceMsg>) {
                put_bits(payload, m.n_s);
            } else if constexpr (std::is_same_v<T, ChallengeMsg>) {
                put_bits(payload, m.x);
            } else if constexpr (std::is_same_v<T, ResponseMsg>) {
                put_bits(payload, m.r_shuffle);
            } else if constexpr (std::is_same_v<T, ResultMsg>) {
                payload.push_back(m.accept ? 1 : 0);
            } else if constexpr (std::is_same_v<T, UnlockMsg>) {
                put_bits(payload, m.token);
            } else if constexpr (std::is_same_v<T, ErrorMsg>) {
                put_u16(payload, m.code);
            }
        },
        msg);
    std::vector<std::uint8_t> frame;
    frame.reserve(4 + payload.size());
    put_u32(frame, static_cast<std::uint32_t>(payload.size()));
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

Message decode_frame(std::span<const std::uint8_t> frame) {
    if (frame.size() < 5) throw FrameError("frame truncated");
    std::uint32_t declared = 0;
    for (int i = 0; i < 4; ++i) declared = declared << 8 | frame[i];
    if (declared != frame.size() - 4) throw FrameError("frame length mismatch");
    auto payload = frame.subspan(4);
    auto body = payload.subspan(1);
    auto need = [&body](std::size_t n) {
        if (body.size() != n) throw FrameError("frame field length mismatch");
    };
    auto bits = [](std::span<const std::uint8_t> b, std::size_t len) {
        try {
            return BitString::from_bytes(b, len);
        } catch (const std::invalid_argument& e) {
            throw FrameError(e.what());
        }
    };
    switch (payload[0]) {
        case 0x01:
            need(0);
            return InitMsg{};
        case 0x02: {
            need(40);
            Auth1Msg m;
            m.id = read_u64(body.first(8));
            m.n_even_shuffled = bits(body.subspan(8, 16), 128);
            m.n_d = bits(body.subspan(24, 16), 128);
            return m;
        }
        case 0x03:
            need(16);
            return NonceMsg{bits(body, 128)};
        case 0x04:
            need(16);
            return ChallengeMsg{bits(body, 128)};
        case 0x05:
            need(16);
            return ResponseMsg{bits(body, 127)};
        case 0x06:
            need(1);
            if (body[0] > 1) throw FrameError("bad RESULT value");
            return ResultMsg{body[0] == 1};
        case 0x07:
            need(16);
            return UnlockMsg{bits(body, 128)};
        case 0x08:
            need(2);
            return ErrorMsg{static_cast<std::uint16_t>(body[0] << 8 | body[1])};
        default:
            throw FrameError("unknown frame tag");
    }
}

// ---------------------------------------------------------------------------
// Device state persistence
// ---------------------------------------------------------------------------

void DeviceState::save(const std::string& path) const {
    std::vector<std::uint8_t> out;
    out.reserve(kFileBytes);
    put_u64(out, id);
    put_u64(out, pair_index);
    put_u64(out, counter1);
    put_u64(out, counter2);
    put_u64(out, fail_count);
    out.push_back(locked ? 1 : 0);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("DeviceState::save: cannot open " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("DeviceState::save: write failed");
}

DeviceState DeviceState::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("DeviceState::load: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() != kFileBytes) throw std::runtime_error("DeviceState::load: bad file size");
    DeviceState st;
    std::span<const std::uint8_t> b(bytes);
    st.id = read_u64(b.subspan(0, 8));
    st.pair_index = read_u64(b.subspan(8, 8));
    st.counter1 = read_u64(b.subspan(16, 8));
    st.counter2 = read_u64(b.subspan(24, 8));
    st.fail_count = read_u64(b.subspan(32, 8));
    if (bytes[40] > 1) throw std::runtime_error("DeviceState::load: bad lock flag");
    st.locked = bytes[40] == 1;
    return st;
}

// ---------------------------------------------------------------------------
// Enrollment
// ---------------------------------------------------------------------------

DeviceState enroll(const ProtocolConfig& config, const PufInstance& puf,
                   const MasterSecret& master_secret, std::uint64_t device_id,
                   const BchCode& code, Database& db, Prng64& seal_rng) {
    config.validate();
    if (puf.config().response_len != config.response_len)
        throw std::invalid_argument("enroll: PUF response length does not match config");

    KeyTriple keys = derive_keys(master_secret);
    db.add_device(device_id);

    Prng64 helper_rng(fold_seed(config.seed) ^ device_id ^ kHelperRngSalt);
    Prng64 dummy_noise(0);
    RnStream stream(config.seed, config.m);
    std::uint64_t c1 = config.counter1_init;
    std::uint64_t c2 = config.counter2_init;
    IndexKey pending{};
    for (std::uint64_t i = 0; i <= config.m; ++i) {
        BitString rn = stream.next_rn();
        if (i % 2 == 0) {
            pending = prf_index(keys.k_idx, shuffle(rn, c2));
        } else {
            BitString response = puf.eval_response(rn, /*noisy=*/false, dummy_noise);
            BitString rs = shuffle(response, c2);
            HelperData help = helper_gen(code, response, helper_rng);
            BitString s = shuffle(rn, c1);
            RecordPlain record{c2, s, rs, help.mask};
            auto plain = record.serialize();
            db.put(device_id, DbRow{pending, seal(keys.k_enc, keys.k_mac, plain, seal_rng)});
            c1 += config.const1;
            c2 += config.const2;
        }
    }

    DeviceState st;
    st.id = device_id;
    st.pair_index = 0;
    st.counter1 = config.counter1_init;
    st.counter2 = config.counter2_init;
    return st;
}

// ---------------------------------------------------------------------------
// Device
// ---------------------------------------------------------------------------

BitString draw_balanced_nonce(Prng64& rng) {
    for (;;) {
        std::uint64_t words[2] = {rng.next(), rng.next()};
        BitString n = BitString::from_words(words, 128);
        if (balance_check(n)) return n;
    }
}

Device::Device(ProtocolConfig config, const PufInstance& puf, DeviceState state,
               Prng64 nonce_rng, Prng64 noise_rng)
    : config_(std::move(config)), puf_(puf), state_(state), nonce_rng_(nonce_rng),
      noise_rng_(noise_rng), stream_(config_.seed, config_.m) {
    config_.validate();
}

void Device::advance_pair() {
    ++state_.pair_index;
    std::uint64_t p = state_.pair_index % config_.pairs();
    state_.counter1 = config_.counter1_init + p * config_.const1;
    state_.counter2 = config_.counter2_init + p * config_.const2;
}

void Device::void_round() {
    ++state_.fail_count;
    if (state_.fail_count >= config_.omega) state_.locked = true;
    advance_pair();
    phase_ = Phase::kIdle;
    pending_nonce_.reset();
}

void Device::finish_round() {
    state_.fail_count = 0;
    advance_pair();
    phase_ = Phase::kIdle;
    pending_nonce_.reset();
}

Message Device::on_init(std::uint64_t now_ms) {
    if (state_.locked) return ErrorMsg{kErrLocked};
    if (phase_ != Phase::kIdle) void_round();  // the previous round never completed
    if (state_.locked) return ErrorMsg{kErrLocked};

    BitString n_d = draw_balanced_nonce(nonce_rng_);
    std::uint64_t p = state_.pair_index % config_.pairs();
    stream_.seek(2 * p);
    n_even_ = stream_.next_rn();

    Auth1Msg msg;
    msg.id = state_.id;
    msg.n_even_shuffled = shuffle(n_even_, state_.counter2);
    msg.n_d = n_d;
    n_ds_ = shuffle(n_d, state_.counter2);
    deadline_ms_ = now_ms + config_.tau_ms;
    phase_ = Phase::kAwaitNonce;
    pending_nonce_.reset();
    return msg;
}

std::optional<Message> Device::on_nonce(const NonceMsg& msg, std::uint64_t now_ms) {
    if (state_.locked) return ErrorMsg{kErrLocked};
    if (phase_ != Phase::kAwaitNonce) return ErrorMsg{kErrProtocol};
    if (now_ms > deadline_ms_) {
        void_round();
        return std::nullopt;
    }
    if (!balance_check(msg.n_s)) {
        void_round();
        return std::nullopt;
    }
    pending_nonce_ = msg;
    phase_ = Phase::kAwaitChallenge;
    return std::nullopt;
}

std::optional<Message> Device::on_challenge(const ChallengeMsg& msg, std::uint64_t now_ms) {
    if (state_.locked) return ErrorMsg{kErrLocked};
    if (phase_ != Phase::kAwaitChallenge) return ErrorMsg{kErrProtocol};
    if (now_ms > deadline_ms_) {
        void_round();
        return std::nullopt;
    }

    const BitString& n_s = pending_nonce_->n_s;
    BitString n_ss = shuffle(n_s, state_.counter2);
    BitString n_odd = stream_.next_rn();

    // Stream-authentication comparator: recover the shuffled challenge and
    // compare against the odd RN generated on-device. On mismatch the PUF
    // is never invoked.
    BitString s_recovered = msg.x ^ n_ds_ ^ n_ss;
    BitString n_prime = deshuffle(s_recovered, state_.counter1);
    if (n_prime != n_odd) {
        void_round();
        return std::nullopt;
    }

    BitString r_noisy = puf_.eval_response(n_prime, /*noisy=*/true, noise_rng_);
    BitString masked = r_noisy ^ n_s.prefix(config_.response_len);
    ResponseMsg out{shuffle(masked, state_.counter2)};
    finish_round();
    return out;
}

Message Device::on_unlock(const UnlockMsg& msg) {
    if (msg.token.size() != config_.admin_token.size()) return ErrorMsg{kErrBadToken};
    auto a = msg.token.to_bytes();
    auto b = config_.admin_token.to_bytes();
    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff |= a[i] ^ b[i];
    if (diff != 0) return ErrorMsg{kErrBadToken};
    state_.locked = false;
    state_.fail_count = 0;
    phase_ = Phase::kIdle;
    pending_nonce_.reset();
    return ResultMsg{true};  // unlock acknowledgment
}

std::vector<Message> Device::on_message(const Message& msg, std::uint64_t now_ms) {
    if (state_.locked && message_type(msg) != MessageType::kUnlock)
        return {ErrorMsg{kErrLocked}};
    if (std::holds_alternative<InitMsg>(msg)) return {on_init(now_ms)};
    if (const auto* nonce = std::get_if<NonceMsg>(&msg)) {
        auto reply = on_nonce(*nonce, now_ms);
        return reply ? std::vector<Message>{*reply} : std::vector<Message>{};
    }
    if (const auto* challenge = std::get_if<ChallengeMsg>(&msg)) {
        auto reply = on_challenge(*challenge, now_ms);
        return reply ? std::vector<Message>{*reply} : std::vector<Message>{};
    }
    if (const auto* unlock = std::get_if<UnlockMsg>(&msg)) return {on_unlock(*unlock)};
    if (std::holds_alternative<ResultMsg>(msg) || std::holds_alternative<ErrorMsg>(msg))
        return {};
    return {ErrorMsg{kErrProtocol}};
}

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

ServerSession::ServerSession(const Database& db, const MasterSecret& ms, const BchCode& code,
                             Prng64& nonce_rng)
    : db_(db), keys_(derive_keys(ms)), code_(code), nonce_rng_(nonce_rng) {}

Message ServerSession::start() { return InitMsg{}; }

std::vector<Message> ServerSession::on_auth1(const Auth1Msg& msg) {
    if (phase_ != Phase::kAwaitAuth1) return {ErrorMsg{kErrProtocol}};
    auto reject = [this]() -> std::vector<Message> {
        phase_ = Phase::kDone;
        return {ResultMsg{false}};
    };

    if (!db_.has_device(msg.id)) return reject();
    if (!balance_check(msg.n_d)) return reject();

    n_s_ = draw_balanced_nonce(nonce_rng_);

    IndexKey token = prf_index(keys_.k_idx, msg.n_even_shuffled);
    auto row = db_.get(msg.id, token);
    if (!row) return reject();
    auto plain = open_sealed(keys_.k_enc, keys_.k_mac, row->sealed_payload);
    if (!plain) return reject();
    try {
        record_ = RecordPlain::parse(*plain);
    } catch (const std::runtime_error&) {
        return reject();
    }

    device_id_ = msg.id;
    n_ds_ = shuffle(msg.n_d, record_.counter2);
    n_ss_ = shuffle(n_s_, record_.counter2);
    BitString x = record_.s ^ n_ds_ ^ n_ss_;
    phase_ = Phase::kAwaitResponse;
    return {NonceMsg{n_s_}, ChallengeMsg{x}};
}

Message ServerSession::on_response(const ResponseMsg& msg) {
    if (phase_ != Phase::kAwaitResponse) return ErrorMsg{kErrProtocol};
    phase_ = Phase::kDone;

    BitString r_noisy =
        deshuffle(msg.r_shuffle, record_.counter2) ^ n_s_.prefix(msg.r_shuffle.size());
    auto corrected = recover(code_, HelperData{record_.help}, r_noisy);
    if (!corrected) return ResultMsg{false};
    BitString enrolled = deshuffle(record_.rs, record_.counter2);
    return ResultMsg{*corrected == enrolled};
}

std::vector<Message> ServerSession::on_message(const Message& msg) {
    if (const auto* auth1 = std::get_if<Auth1Msg>(&msg)) return on_auth1(*auth1);
    if (const auto* response = std::get_if<ResponseMsg>(&msg)) return {on_response(*response)};
    if (std::holds_alternative<ErrorMsg>(msg)) return {};
    return {ErrorMsg{kErrProtocol}};
}

}  // namespace pufrla
