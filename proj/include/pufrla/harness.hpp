#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pufrla/protocol.hpp"

namespace pufrla {

// An enrolled device/server pair living in one process, the substrate for
// authentication sweeps and attack scenarios.
struct SystemUnderTest {
    ProtocolConfig config;
    PufConfig puf_config;
    MasterSecret master_secret;
    std::uint64_t device_id;
    BchCode code;
    Database db;
    PufInstance puf;
    DeviceState initial_state;
};

SystemUnderTest make_system(ProtocolConfig config, PufConfig puf_config,
                            MasterSecret master_secret, std::uint64_t device_id,
                            std::uint64_t seal_seed);

// Frame filter applied while a frame is in flight; returns the (possibly
// rewritten) frame, or nullopt to drop it.
using FrameHook = std::function<std::optional<std::vector<std::uint8_t>>(
    const std::vector<std::uint8_t>&)>;

struct RoundOutcome {
    bool server_accept = false;
    bool device_responded = false;
    bool device_error = false;
    std::uint16_t device_error_code = 0;
};

// Runs one full authentication cycle over the in-process channel, pumping frames
// between the device and a fresh server session until both sides go quiet.
// The hooks see every frame in its wire encoding.
RoundOutcome run_round(Device& device, ServerSession& session, std::uint64_t now_ms,
                       const FrameHook& server_to_device = {},
                       const FrameHook& device_to_server = {},
                       std::vector<std::vector<std::uint8_t>>* transcript = nullptr);

struct SweepResult {
    std::uint64_t rounds = 0;
    std::uint64_t accepts = 0;
    double success_fraction() const {
        return rounds == 0 ? 0.0 : static_cast<double>(accepts) / static_cast<double>(rounds);
    }
};

// Honest authentication sweep at the given bit error rate (sigma calibrated
// once up front; ber 0 skips calibration). Deterministic given nonce_seed.
SweepResult run_rounds(const SystemUnderTest& sut, std::uint64_t rounds, double ber,
                       std::uint64_t nonce_seed,
                       std::vector<std::vector<std::uint8_t>>* transcript = nullptr);

// ---------------------------------------------------------------------------
// Adversary scenarios
// ---------------------------------------------------------------------------

struct AttackReport {
    std::string mode;
    std::uint64_t trials = 0;
    std::uint64_t accepts_by_server = 0;
    std::uint64_t puf_invocations_on_device = 0;
    bool lockout_triggered = false;
    std::uint64_t first_lockout_after_failures = 0;
    std::uint64_t control_accepts = 0;  // passthrough sanity rounds
    double elapsed_seconds = 0.0;
    std::vector<std::pair<std::string, std::string>> extra;

    std::string to_report() const;  // line-oriented key=value block
    bool passed() const;
};

// Manipulates CHALLENGE frames (every single-bit position, then random
// substitutions) and substitutes RESPONSE frames; the device PUF must stay
// silent for manipulated challenges and the server must never accept.
AttackReport attack_mitm(const SystemUnderTest& sut, std::uint64_t trials, std::uint64_t seed);

// Drives the device interface directly with random challenge words after an
// honest NONCE; asserts the PUF gate and the omega lockout.
AttackReport attack_bruteforce(const SystemUnderTest& sut, std::uint64_t trials,
                               std::uint64_t seed);

// Replays a recorded honest transcript against fresh server sessions.
AttackReport attack_replay(const SystemUnderTest& sut, std::uint64_t seed);

// ---------------------------------------------------------------------------
// PUF population metrics
// ---------------------------------------------------------------------------

struct MetricsReport {
    double uniqueness_pct = 0.0;
    double reliability_pct = 0.0;
    double randomness_pct = 0.0;
    std::size_t instances = 0;   // r
    std::size_t challenges = 0;  // v
    std::size_t response_bits = 0;
    std::size_t samples = 0;  // l, per challenge
    double ber = 0.0;

    std::string to_report() const;
};

// The v odd-indexed RNs of a stream, used as metric challenges.
std::vector<BitString> odd_challenges(const BitString& seed, std::size_t v);

// Formula cores, usable with synthetic response matrices.
double uniqueness_from_responses(const std::vector<std::vector<BitString>>& responses);
double reliability_from_samples(const std::vector<BitString>& reference,
                                const std::vector<std::vector<BitString>>& samples);
double randomness_from_responses(const std::vector<BitString>& responses);

double metric_uniqueness(const std::vector<PufInstance>& instances,
                         const std::vector<BitString>& challenges);
// Noisy samples are the noiseless response with i.i.d. bit flips at rate ber.
double metric_reliability(const PufInstance& instance, const std::vector<BitString>& challenges,
                          std::size_t samples, double ber, Prng64& rng);
double metric_randomness(const PufInstance& instance, const std::vector<BitString>& challenges);

MetricsReport compute_metrics(std::size_t instances, std::size_t challenges, std::size_t samples,
                              double ber, std::uint64_t base_device_seed,
                              const BitString& challenge_seed);

}  // namespace pufrla
