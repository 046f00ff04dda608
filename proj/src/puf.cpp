#include "pufrla/puf.hpp"

#include <cmath>
#include <stdexcept>

namespace pufrla {

void PufConfig::validate() const {
    if (stages < 1) throw std::invalid_argument("PufConfig: stages must be >= 1");
    if (chains < 1) throw std::invalid_argument("PufConfig: chains must be >= 1");
    if (response_len < 1 || response_len > 128)
        throw std::invalid_argument("PufConfig: response_len must be in 1..128");
    if (sigma_noise < 0.0) throw std::invalid_argument("PufConfig: sigma_noise must be >= 0");
}

PufInstance::PufInstance(PufConfig config) : config_(config) {
    config_.validate();
    Prng64 rng(config_.device_seed);
    weights_.resize(config_.chains * (config_.stages + 1));
    for (auto& w : weights_) w = standard_normal(rng);
}

PufInstance PufInstance::with_weights(PufConfig config, std::vector<double> weights) {
    PufInstance inst(config);
    if (weights.size() != config.chains * (config.stages + 1))
        throw std::invalid_argument("PufInstance::with_weights: weight count mismatch");
    inst.weights_ = std::move(weights);
    return inst;
}

double PufInstance::weight(std::size_t chain, std::size_t k) const {
    return weights_.at(chain * (config_.stages + 1) + k);
}

int PufInstance::eval_bit(const BitString& challenge, bool noisy, Prng64& noise_rng) const {
    const std::size_t stages = config_.stages;
    if (challenge.size() != stages)
        throw std::invalid_argument("PufInstance::eval_bit: challenge length mismatch");

    // phi_k = prod_{j >= k} (1 - 2 c_j), built as a suffix product.
    std::vector<double> phi(stages + 1);
    phi[stages] = 1.0;
    for (std::size_t k = stages; k-- > 0;)
        phi[k] = phi[k + 1] * (challenge.bit(k) ? -1.0 : 1.0);

    int bit = 0;
    for (std::size_t c = 0; c < config_.chains; ++c) {
        const double* w = &weights_[c * (stages + 1)];
        double margin = 0.0;
        for (std::size_t k = 0; k <= stages; ++k) margin += w[k] * phi[k];
        if (noisy && config_.sigma_noise > 0.0)
            margin += config_.sigma_noise * standard_normal(noise_rng);
        bit ^= margin > 0.0 ? 1 : 0;
    }
    return bit;
}

BitString PufInstance::eval_response(const BitString& seed_rn, bool noisy,
                                     Prng64& noise_rng) const {
    invocations_.fetch_add(1);
    auto subs = subchallenges(seed_rn, config_.response_len, config_.stages);
    BitString response = BitString::zeros(config_.response_len);
    for (std::size_t i = 0; i < subs.size(); ++i)
        response.set_bit(i, eval_bit(subs[i], noisy, noise_rng) != 0);
    return response;
}

double calibrate_sigma(const PufInstance& inst, double target_ber) {
    if (target_ber < 0.0 || target_ber >= 0.5)
        throw std::invalid_argument("calibrate_sigma: target_ber must be in [0, 0.5)");
    if (target_ber == 0.0) return 0.0;

    const PufConfig& cfg = inst.config();
    const std::size_t bits = 30000;
    const std::size_t stages = cfg.stages;

    // Precomputed noiseless margins and unit-noise draws; bit error at a
    // given sigma is then a pure threshold, which makes the Monte-Carlo BER
    // estimate monotone in sigma and the bisection well behaved.
    Prng64 chal_rng(0x7275'6e5f'6d61'7267ull ^ cfg.device_seed);
    Prng64 z_rng(0x6361'6c69'6272'6174ull ^ cfg.device_seed);
    std::vector<double> margins(bits * cfg.chains);
    std::vector<double> zs(bits * cfg.chains);
    for (std::size_t i = 0; i < bits; ++i) {
        std::uint64_t words[2] = {chal_rng.next(), chal_rng.next()};
        BitString challenge = BitString::from_words(words, stages);
        std::vector<double> phi(stages + 1);
        phi[stages] = 1.0;
        for (std::size_t k = stages; k-- > 0;)
            phi[k] = phi[k + 1] * (challenge.bit(k) ? -1.0 : 1.0);
        for (std::size_t c = 0; c < cfg.chains; ++c) {
            double margin = 0.0;
            for (std::size_t k = 0; k <= stages; ++k) margin += inst.weight(c, k) * phi[k];
            margins[i * cfg.chains + c] = margin;
            zs[i * cfg.chains + c] = standard_normal(z_rng);
        }
    }

    auto estimate_ber = [&](double sigma) {
        std::size_t flips = 0;
        for (std::size_t i = 0; i < bits; ++i) {
            int flip = 0;
            for (std::size_t c = 0; c < cfg.chains; ++c) {
                double m = margins[i * cfg.chains + c];
                double noisy = m + sigma * zs[i * cfg.chains + c];
                flip ^= ((m > 0.0) != (noisy > 0.0)) ? 1 : 0;
            }
            flips += flip;
        }
        return static_cast<double>(flips) / static_cast<double>(bits);
    };

    double hi = 1.0;
    int expand = 0;
    while (estimate_ber(hi) < target_ber) {
        hi *= 2.0;
        if (++expand > 60) throw std::runtime_error("calibrate_sigma: no sigma reaches target");
    }
    double lo = 0.0;
    double mid = hi;
    for (int iter = 0; iter < 80; ++iter) {
        mid = 0.5 * (lo + hi);
        double ber = estimate_ber(mid);
        if (std::abs(ber - target_ber) <= 0.002) return mid;
        if (ber < target_ber)
            lo = mid;
        else
            hi = mid;
    }
    if (std::abs(estimate_ber(mid) - target_ber) <= 0.01) return mid;
    throw std::runtime_error("calibrate_sigma: did not converge");
}

}  // namespace pufrla
