#include "pufrla/harness.hpp"

#include <chrono>
#include <deque>
#include <sstream>
#include <stdexcept>

#include "pufrla/shuffler.hpp"

namespace pufrla {

namespace {

constexpr std::uint64_t kServerNonceSalt = 0x7365727665726e73ull;  // "serverns"
constexpr std::uint64_t kNoiseSalt = 0x6e6f697365726e67ull;        // "noiserng"

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::optional<std::vector<std::uint8_t>> apply_hook(const FrameHook& hook,
                                                    std::vector<std::uint8_t> frame) {
    if (!hook) return frame;
    return hook(frame);
}

}  // namespace

SystemUnderTest make_system(ProtocolConfig config, PufConfig puf_config,
                            MasterSecret master_secret, std::uint64_t device_id,
                            std::uint64_t seal_seed) {
    config.validate();
    puf_config.validate();
    BchCode code = BchCode::build();
    PufInstance puf(puf_config);
    Database db;
    Prng64 seal_rng(seal_seed);
    DeviceState state = enroll(config, puf, master_secret, device_id, code, db, seal_rng);
    return SystemUnderTest{std::move(config), puf_config, std::move(master_secret),
                           device_id,         std::move(code), std::move(db),
                           std::move(puf),    state};
}

RoundOutcome run_round(Device& device, ServerSession& session, std::uint64_t now_ms,
                       const FrameHook& server_to_device, const FrameHook& device_to_server,
                       std::vector<std::vector<std::uint8_t>>* transcript) {
    RoundOutcome outcome;
    std::deque<Message> to_device;
    std::deque<Message> to_server;

    auto send_to_device = [&](const Message& m) {
        auto frame = apply_hook(server_to_device, encode_frame(m));
        if (!frame) return;  // dropped in flight
        if (transcript) transcript->push_back(*frame);
        to_device.push_back(decode_frame(*frame));
    };
    auto send_to_server = [&](const Message& m) {
        auto frame = apply_hook(device_to_server, encode_frame(m));
        if (!frame) return;
        if (transcript) transcript->push_back(*frame);
        to_server.push_back(decode_frame(*frame));
    };

    send_to_device(session.start());
    while (!to_device.empty() || !to_server.empty()) {
        while (!to_device.empty()) {
            Message m = to_device.front();
            to_device.pop_front();
            for (const Message& reply : device.on_message(m, now_ms)) {
                if (message_type(reply) == MessageType::kResponse) outcome.device_responded = true;
                if (const auto* err = std::get_if<ErrorMsg>(&reply)) {
                    outcome.device_error = true;
                    outcome.device_error_code = err->code;
                    if (transcript) transcript->push_back(encode_frame(reply));
                    continue;  // adversary-facing error, not forwarded
                }
                send_to_server(reply);
            }
        }
        while (!to_server.empty()) {
            Message m = to_server.front();
            to_server.pop_front();
            for (const Message& reply : session.on_message(m)) {
                if (const auto* result = std::get_if<ResultMsg>(&reply))
                    outcome.server_accept = result->accept;
                send_to_device(reply);
            }
        }
    }
    return outcome;
}

SweepResult run_rounds(const SystemUnderTest& sut, std::uint64_t rounds, double ber,
                       std::uint64_t nonce_seed,
                       std::vector<std::vector<std::uint8_t>>* transcript) {
    PufConfig puf_cfg = sut.puf_config;
    puf_cfg.sigma_noise = ber > 0.0 ? calibrate_sigma(sut.puf, ber) : 0.0;
    PufInstance noisy_puf(puf_cfg);

    Device device(sut.config, noisy_puf, sut.initial_state, Prng64(nonce_seed),
                  Prng64(nonce_seed ^ kNoiseSalt));
    Prng64 server_nonce_rng(nonce_seed ^ kServerNonceSalt);

    SweepResult result;
    result.rounds = rounds;
    for (std::uint64_t i = 0; i < rounds; ++i) {
        ServerSession session(sut.db, sut.master_secret, sut.code, server_nonce_rng);
        RoundOutcome outcome = run_round(device, session, i, {}, {}, transcript);
        if (outcome.server_accept) ++result.accepts;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Attack scenarios
// ---------------------------------------------------------------------------

namespace {

// CHALLENGE frame layout: 4-byte length || tag || 16-byte X field.
constexpr std::size_t kChallengeFieldOffset = 5;

bool is_frame_type(const std::vector<std::uint8_t>& frame, MessageType type) {
    return frame.size() >= 5 && frame[4] == static_cast<std::uint8_t>(type);
}

// Unlocks the device out-of-band when a scenario needs to keep hammering it.
void admin_unlock(Device& device) {
    device.on_message(UnlockMsg{device.config().admin_token}, 0);
}

void fill_random_bits(BitString& b, Prng64& rng) {
    std::uint64_t words[2] = {rng.next(), rng.next()};
    b = BitString::from_words(words, b.size());
}

}  // namespace

std::string AttackReport::to_report() const {
    std::ostringstream out;
    out << "mode=" << mode << '\n';
    out << "trials=" << trials << '\n';
    out << "accepts_by_server=" << accepts_by_server << '\n';
    out << "puf_invocations_on_device=" << puf_invocations_on_device << '\n';
    out << "lockout_triggered=" << (lockout_triggered ? "true" : "false") << '\n';
    if (lockout_triggered)
        out << "first_lockout_after_failures=" << first_lockout_after_failures << '\n';
    out << "control_accepts=" << control_accepts << '\n';
    for (const auto& [k, v] : extra) out << k << '=' << v << '\n';
    out << "elapsed_seconds=" << elapsed_seconds << '\n';
    return out.str();
}

bool AttackReport::passed() const {
    return accepts_by_server == 0 && puf_invocations_on_device == 0 && control_accepts > 0;
}

AttackReport attack_mitm(const SystemUnderTest& sut, std::uint64_t trials, std::uint64_t seed) {
    Stopwatch watch;
    AttackReport report;
    report.mode = "mitm";

    Device device(sut.config, sut.puf, sut.initial_state, Prng64(seed), Prng64(seed ^ kNoiseSalt));
    Prng64 server_nonce_rng(seed ^ kServerNonceSalt);
    Prng64 attack_rng(seed ^ 0x6d69746d6d69746dull);
    sut.puf.reset_invocation_count();

    std::uint64_t now = 0;
    std::uint64_t manipulated_rounds = 0;
    auto run_manipulated = [&](const FrameHook& s2d, const FrameHook& d2s) {
        if (device.state().locked) {
            if (!report.lockout_triggered) {
                report.lockout_triggered = true;
                report.first_lockout_after_failures = sut.config.omega;
            }
            admin_unlock(device);
        }
        ServerSession session(sut.db, sut.master_secret, sut.code, server_nonce_rng);
        RoundOutcome outcome = run_round(device, session, now++, s2d, d2s);
        ++manipulated_rounds;
        if (outcome.server_accept) ++report.accepts_by_server;
    };

    // (a) Exhaustive single-bit manipulation of the CHALLENGE field.
    for (std::size_t bit = 0; bit < 128; ++bit) {
        run_manipulated(
            [bit](const std::vector<std::uint8_t>& frame)
                -> std::optional<std::vector<std::uint8_t>> {
                if (!is_frame_type(frame, MessageType::kChallenge)) return frame;
                auto copy = frame;
                copy[kChallengeFieldOffset + bit / 8] ^=
                    static_cast<std::uint8_t>(0x80u >> (bit % 8));
                return copy;
            },
            {});
    }

    // (b) Full random replacement of the CHALLENGE field.
    std::uint64_t replacements = trials > 128 ? (trials - 128) / 2 : 0;
    for (std::uint64_t i = 0; i < replacements; ++i) {
        run_manipulated(
            [&attack_rng](const std::vector<std::uint8_t>& frame)
                -> std::optional<std::vector<std::uint8_t>> {
                if (!is_frame_type(frame, MessageType::kChallenge)) return frame;
                auto copy = frame;
                for (std::size_t i = 0; i < 16; ++i)
                    copy[kChallengeFieldOffset + i] =
                        static_cast<std::uint8_t>(attack_rng.next() >> 56);
                return copy;
            },
            {});
    }
    report.puf_invocations_on_device = sut.puf.invocation_count();
    report.extra.emplace_back("challenge_manipulation_trials",
                              std::to_string(manipulated_rounds));

    // (c) Random substitution of the RESPONSE field. The PUF legitimately
    // fires here (the challenge is honest); the server must still reject.
    std::uint64_t response_trials = trials > manipulated_rounds ? trials - manipulated_rounds : 0;
    for (std::uint64_t i = 0; i < response_trials; ++i) {
        run_manipulated({}, [&attack_rng](const std::vector<std::uint8_t>& frame)
                                -> std::optional<std::vector<std::uint8_t>> {
            if (!is_frame_type(frame, MessageType::kResponse)) return frame;
            auto copy = frame;
            for (std::size_t i = 0; i < 15; ++i)
                copy[kChallengeFieldOffset + i] =
                    static_cast<std::uint8_t>(attack_rng.next() >> 56);
            copy[kChallengeFieldOffset + 15] =
                static_cast<std::uint8_t>((attack_rng.next() >> 56) & 0xfe);  // keep pad bit 0
            return copy;
        });
    }
    report.extra.emplace_back("response_substitution_trials", std::to_string(response_trials));
    report.trials = manipulated_rounds;

    // Passthrough control: the harness itself must be able to authenticate.
    if (device.state().locked) admin_unlock(device);
    ServerSession control(sut.db, sut.master_secret, sut.code, server_nonce_rng);
    if (run_round(device, control, now++, {}, {}).server_accept) ++report.control_accepts;

    report.elapsed_seconds = watch.seconds();
    return report;
}

AttackReport attack_bruteforce(const SystemUnderTest& sut, std::uint64_t trials,
                               std::uint64_t seed) {
    Stopwatch watch;
    AttackReport report;
    report.mode = "bruteforce";
    report.trials = trials;

    Device device(sut.config, sut.puf, sut.initial_state, Prng64(seed), Prng64(seed ^ kNoiseSalt));
    Prng64 attack_rng(seed ^ 0x62727574656b6579ull);
    sut.puf.reset_invocation_count();

    std::uint64_t now = 0;
    std::uint64_t consecutive_failures = 0;
    bool post_lockout_checked = false;
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        if (device.state().locked) {
            if (!report.lockout_triggered) {
                report.lockout_triggered = true;
                report.first_lockout_after_failures = consecutive_failures;
            }
            if (!post_lockout_checked) {
                post_lockout_checked = true;
                // Locked contract: INIT answers ERROR, a bad unlock token
                // leaves the lock in place, the admin token releases it.
                auto replies = device.on_message(InitMsg{}, now);
                bool init_refused = replies.size() == 1 &&
                                    std::holds_alternative<ErrorMsg>(replies[0]) &&
                                    std::get<ErrorMsg>(replies[0]).code == kErrLocked;
                BitString bad_token = sut.config.admin_token ^ BitString::ones(128);
                device.on_message(UnlockMsg{bad_token}, now);
                bool still_locked = device.state().locked;
                report.extra.emplace_back("post_lockout_init_refused",
                                          init_refused ? "true" : "false");
                report.extra.emplace_back("bad_unlock_token_refused",
                                          still_locked ? "true" : "false");
            }
            admin_unlock(device);
            consecutive_failures = 0;
        }

        // Honest INIT/AUTH1/NONCE exchange, then a random challenge word.
        auto auth1 = device.on_message(InitMsg{}, now);
        if (auth1.size() != 1 || !std::holds_alternative<Auth1Msg>(auth1[0]))
            throw std::logic_error("bruteforce: device did not emit AUTH1");
        BitString n_s = draw_balanced_nonce(attack_rng);
        device.on_message(NonceMsg{n_s}, now);
        BitString x = BitString::zeros(128);
        fill_random_bits(x, attack_rng);
        auto replies = device.on_message(ChallengeMsg{x}, now);
        for (const Message& m : replies)
            if (message_type(m) == MessageType::kResponse)
                report.extra.emplace_back("unexpected_response_at_trial", std::to_string(trial));
        ++consecutive_failures;
        ++now;
    }

    report.puf_invocations_on_device = sut.puf.invocation_count();

    // Control: after an unlock the device still authenticates honestly.
    if (device.state().locked) admin_unlock(device);
    Prng64 server_nonce_rng(seed ^ kServerNonceSalt);
    ServerSession control(sut.db, sut.master_secret, sut.code, server_nonce_rng);
    if (run_round(device, control, now, {}, {}).server_accept) ++report.control_accepts;

    report.elapsed_seconds = watch.seconds();
    return report;
}

AttackReport attack_replay(const SystemUnderTest& sut, std::uint64_t seed) {
    Stopwatch watch;
    AttackReport report;
    report.mode = "replay";

    Device device(sut.config, sut.puf, sut.initial_state, Prng64(seed), Prng64(seed ^ kNoiseSalt));
    Prng64 server_nonce_rng(seed ^ kServerNonceSalt);
    sut.puf.reset_invocation_count();

    // Record one honest round.
    std::vector<std::vector<std::uint8_t>> transcript;
    ServerSession honest(sut.db, sut.master_secret, sut.code, server_nonce_rng);
    RoundOutcome honest_outcome = run_round(device, honest, 0, {}, {}, &transcript);
    if (!honest_outcome.server_accept)
        throw std::logic_error("replay: honest recording round failed");
    std::vector<std::uint8_t> recorded_auth1;
    std::vector<std::uint8_t> recorded_response;
    for (const auto& frame : transcript) {
        if (is_frame_type(frame, MessageType::kAuth1)) recorded_auth1 = frame;
        if (is_frame_type(frame, MessageType::kResponse)) recorded_response = frame;
    }
    sut.puf.reset_invocation_count();  // count only what the replays trigger

    std::uint64_t replay_trials = 0;

    // (a) Full-transcript replay: the adversary masquerades as the device.
    {
        ServerSession session(sut.db, sut.master_secret, sut.code, server_nonce_rng);
        session.start();
        auto replies = session.on_auth1(std::get<Auth1Msg>(decode_frame(recorded_auth1)));
        bool challenged = replies.size() == 2;
        bool accepted = false;
        if (challenged) {
            Message result =
                session.on_response(std::get<ResponseMsg>(decode_frame(recorded_response)));
            accepted = std::holds_alternative<ResultMsg>(result) &&
                       std::get<ResultMsg>(result).accept;
        }
        ++replay_trials;
        if (accepted) ++report.accepts_by_server;
        report.extra.emplace_back("full_transcript_replay_accepted", accepted ? "true" : "false");
    }

    // (b) AUTH1 substitution against a live device: the server answers for
    // the replayed pair, whose counters the device has already advanced past,
    // so the comparator fails and no response is produced.
    {
        ServerSession session(sut.db, sut.master_secret, sut.code, server_nonce_rng);
        std::uint64_t before = sut.puf.invocation_count();
        RoundOutcome outcome = run_round(
            device, session, 1,
            {},
            [&recorded_auth1](const std::vector<std::uint8_t>& frame)
                -> std::optional<std::vector<std::uint8_t>> {
                if (is_frame_type(frame, MessageType::kAuth1)) return recorded_auth1;
                return frame;
            });
        ++replay_trials;
        if (outcome.server_accept) ++report.accepts_by_server;
        bool gate_held = sut.puf.invocation_count() == before && !outcome.device_responded;
        report.extra.emplace_back("auth1_replay_outcome",
                                  gate_held ? "comparator_false_no_response" : "unexpected");
    }

    report.trials = replay_trials;
    // The recording and control rounds legitimately invoke the PUF; the
    // replayed frames themselves must not have.
    report.puf_invocations_on_device = sut.puf.invocation_count();

    // Control: a live honest session interleaved with replays still works.
    ServerSession control(sut.db, sut.master_secret, sut.code, server_nonce_rng);
    if (run_round(device, control, 2, {}, {}).server_accept) ++report.control_accepts;

    report.elapsed_seconds = watch.seconds();
    return report;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

std::string MetricsReport::to_report() const {
    std::ostringstream out;
    out << "uniqueness_pct=" << uniqueness_pct << '\n';
    out << "reliability_pct=" << reliability_pct << '\n';
    out << "randomness_pct=" << randomness_pct << '\n';
    out << "instances=" << instances << '\n';
    out << "challenges=" << challenges << '\n';
    out << "response_bits=" << response_bits << '\n';
    out << "samples=" << samples << '\n';
    out << "ber=" << ber << '\n';
    return out.str();
}

std::vector<BitString> odd_challenges(const BitString& seed, std::size_t v) {
    RnStream stream(seed, 2 * static_cast<std::uint64_t>(v) - 1);
    std::vector<BitString> challenges;
    challenges.reserve(v);
    for (std::size_t i = 0; i < v; ++i) {
        stream.next_rn();  // even-indexed, unused here
        challenges.push_back(stream.next_rn());
    }
    return challenges;
}

double uniqueness_from_responses(const std::vector<std::vector<BitString>>& responses) {
    std::size_t r = responses.size();
    if (r < 2) throw std::invalid_argument("uniqueness: need at least two instances");
    std::size_t v = responses[0].size();
    if (v == 0) throw std::invalid_argument("uniqueness: need at least one challenge");
    std::size_t n = responses[0][0].size();
    double sum = 0.0;
    for (std::size_t p = 0; p + 1 < r; ++p)
        for (std::size_t q = p + 1; q < r; ++q)
            for (std::size_t i = 0; i < v; ++i)
                sum += static_cast<double>(hamming_distance(responses[p][i], responses[q][i]));
    double denom = static_cast<double>(n) * static_cast<double>(v) * static_cast<double>(r) *
                   static_cast<double>(r - 1);
    return 2.0 * sum / denom * 100.0;
}

double reliability_from_samples(const std::vector<BitString>& reference,
                                const std::vector<std::vector<BitString>>& samples) {
    std::size_t v = reference.size();
    if (v == 0 || samples.size() != v)
        throw std::invalid_argument("reliability: shape mismatch");
    std::size_t l = samples[0].size();
    if (l == 0) throw std::invalid_argument("reliability: need at least one sample");
    std::size_t n = reference[0].size();
    double sum = 0.0;
    for (std::size_t i = 0; i < v; ++i)
        for (std::size_t t = 0; t < l; ++t)
            sum += static_cast<double>(hamming_distance(reference[i], samples[i][t]));
    double denom =
        static_cast<double>(v) * static_cast<double>(n) * static_cast<double>(l);
    return 100.0 - sum / denom * 100.0;
}

double randomness_from_responses(const std::vector<BitString>& responses) {
    if (responses.empty()) throw std::invalid_argument("randomness: need responses");
    std::size_t ones = 0, total = 0;
    for (const auto& r : responses) {
        ones += r.popcount();
        total += r.size();
    }
    return static_cast<double>(ones) / static_cast<double>(total) * 100.0;
}

double metric_uniqueness(const std::vector<PufInstance>& instances,
                         const std::vector<BitString>& challenges) {
    if (instances.size() < 2) throw std::invalid_argument("metric_uniqueness: r must be >= 2");
    Prng64 unused(0);
    std::vector<std::vector<BitString>> responses(instances.size());
    for (std::size_t p = 0; p < instances.size(); ++p) {
        responses[p].reserve(challenges.size());
        for (const auto& c : challenges)
            responses[p].push_back(instances[p].eval_response(c, false, unused));
    }
    return uniqueness_from_responses(responses);
}

double metric_reliability(const PufInstance& instance, const std::vector<BitString>& challenges,
                          std::size_t samples, double ber, Prng64& rng) {
    if (challenges.empty() || samples == 0)
        throw std::invalid_argument("metric_reliability: v and l must be >= 1");
    Prng64 unused(0);
    std::vector<BitString> reference;
    reference.reserve(challenges.size());
    for (const auto& c : challenges)
        reference.push_back(instance.eval_response(c, false, unused));

    // Injected-noise samples: each bit flips independently at rate ber.
    constexpr double kInv = 1.0 / 18446744073709551616.0;  // 2^-64
    std::vector<std::vector<BitString>> noisy(challenges.size());
    for (std::size_t i = 0; i < challenges.size(); ++i) {
        noisy[i].reserve(samples);
        for (std::size_t t = 0; t < samples; ++t) {
            BitString sample = reference[i];
            for (std::size_t b = 0; b < sample.size(); ++b)
                if (static_cast<double>(rng.next()) * kInv < ber)
                    sample.set_bit(b, !sample.bit(b));
            noisy[i].push_back(std::move(sample));
        }
    }
    return reliability_from_samples(reference, noisy);
}

double metric_randomness(const PufInstance& instance, const std::vector<BitString>& challenges) {
    if (challenges.empty()) throw std::invalid_argument("metric_randomness: v must be >= 1");
    Prng64 unused(0);
    std::vector<BitString> responses;
    responses.reserve(challenges.size());
    for (const auto& c : challenges)
        responses.push_back(instance.eval_response(c, false, unused));
    return randomness_from_responses(responses);
}

MetricsReport compute_metrics(std::size_t instances, std::size_t challenges, std::size_t samples,
                              double ber, std::uint64_t base_device_seed,
                              const BitString& challenge_seed) {
    MetricsReport report;
    report.instances = instances;
    report.challenges = challenges;
    report.samples = samples;
    report.ber = ber;

    std::vector<PufInstance> population;
    population.reserve(instances);
    for (std::size_t i = 0; i < instances; ++i) {
        PufConfig cfg;
        cfg.device_seed = base_device_seed + i;
        population.emplace_back(cfg);
    }
    report.response_bits = population.front().config().response_len;

    auto chals = odd_challenges(challenge_seed, challenges);
    report.uniqueness_pct = metric_uniqueness(population, chals);
    Prng64 noise_rng(base_device_seed ^ 0x6d65747269636e67ull);
    report.reliability_pct =
        metric_reliability(population.front(), chals, samples, ber, noise_rng);
    report.randomness_pct = metric_randomness(population.front(), chals);
    return report;
}

}  // namespace pufrla
