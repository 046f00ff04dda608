#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "pufrla/bitstring.hpp"
#include "pufrla/prng.hpp"

namespace pufrla {

struct PufConfig {
    std::size_t stages = 64;
    std::size_t chains = 3;         // XOR-combined arbiter chains
    std::size_t response_len = 127; // matches the BCH code length n
    double sigma_noise = 0.0;       // std dev of per-chain evaluation noise
    std::uint64_t device_seed = 0;  // per-device secret

    void validate() const;  // throws std::invalid_argument
};

// Additive-delay arbiter model: each chain holds stages+1 weights drawn once
// from a standard normal stream seeded by device_seed (Box-Muller over
// SplitMix64, see standard_normal). A challenge c maps to the feature vector
// phi with phi_k = prod_{j>=k}(1 - 2 c_j) and a trailing constant 1; the
// chain fires iff w . phi + eps > 0 and the response bit XORs the chains.
//
// Weights are a pure function of (device_seed, stages, chains); noise is
// drawn from the caller's stream, so noiseless evaluation is repeatable.
class PufInstance {
public:
    explicit PufInstance(PufConfig config);
    PufInstance(const PufInstance& other)
        : config_(other.config_), weights_(other.weights_),
          invocations_(other.invocations_.load()) {}
    PufInstance& operator=(const PufInstance& other) {
        config_ = other.config_;
        weights_ = other.weights_;
        invocations_.store(other.invocations_.load());
        return *this;
    }

    // Test seam: fixed weights instead of seed-derived ones
    // (weights[chain * (stages+1) + k]).
    static PufInstance with_weights(PufConfig config, std::vector<double> weights);

    const PufConfig& config() const { return config_; }

    int eval_bit(const BitString& challenge, bool noisy, Prng64& noise_rng) const;

    // One PUF invocation: expands seed_rn into response_len sub-challenges
    // and evaluates one bit per sub-challenge. Bumps the invocation counter.
    BitString eval_response(const BitString& seed_rn, bool noisy, Prng64& noise_rng) const;

    double weight(std::size_t chain, std::size_t k) const;

    // Instrumentation used by the attack harness to assert the PUF gate.
    std::uint64_t invocation_count() const { return invocations_.load(); }
    void reset_invocation_count() const { invocations_.store(0); }

private:
    PufConfig config_;
    std::vector<double> weights_;  // chains x (stages+1)
    mutable std::atomic<std::uint64_t> invocations_{0};
};

// Binary-searches the per-chain noise sigma until the Monte-Carlo bit error
// rate (noisy vs noiseless, >= 10,000 bit evaluations) lands within 0.01 of
// target_ber. target_ber must lie in [0, 0.5).
double calibrate_sigma(const PufInstance& inst, double target_ber);

}  // namespace pufrla
