#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "pufrla/puf.hpp"

using namespace pufrla;

TEST_CASE("config validation") {
    PufConfig bad;
    bad.chains = 0;
    CHECK_THROWS_AS(PufInstance{bad}, std::invalid_argument);
    bad = PufConfig{};
    bad.stages = 0;
    CHECK_THROWS_AS(PufInstance{bad}, std::invalid_argument);
    bad = PufConfig{};
    bad.sigma_noise = -1.0;
    CHECK_THROWS_AS(PufInstance{bad}, std::invalid_argument);
}

TEST_CASE("weights are a pure function of the device seed") {
    PufConfig cfg;
    cfg.device_seed = 1234;
    PufInstance a(cfg), b(cfg);
    for (std::size_t c = 0; c < cfg.chains; ++c)
        for (std::size_t k = 0; k <= cfg.stages; ++k) CHECK(a.weight(c, k) == b.weight(c, k));

    cfg.device_seed = 1235;
    PufInstance other(cfg);
    bool any_differ = false;
    for (std::size_t k = 0; k <= cfg.stages && !any_differ; ++k)
        any_differ = a.weight(0, k) != other.weight(0, k);
    CHECK(any_differ);
}

TEST_CASE("eval_bit hand example: 2 stages, 1 chain, w = (1, -2, 0.5)") {
    PufConfig cfg;
    cfg.stages = 2;
    cfg.chains = 1;
    cfg.response_len = 4;
    auto inst = PufInstance::with_weights(cfg, {1.0, -2.0, 0.5});

    Prng64 unused(0);
    BitString c00 = BitString::zeros(2);
    // phi = (1, 1, 1), w . phi = -0.5 -> bit 0
    CHECK(inst.eval_bit(c00, false, unused) == 0);

    // Flipping challenge bit 1 negates phi_1 only: phi = (-1, 1, 1),
    // w . phi = -2.5 -> still 0.
    BitString c10 = BitString::zeros(2);
    c10.set_bit(0, true);
    CHECK(inst.eval_bit(c10, false, unused) == 0);

    // c = (0,1): phi = (-1, -1, 1), w . phi = 1.5 -> bit 1.
    BitString c01 = BitString::zeros(2);
    c01.set_bit(1, true);
    CHECK(inst.eval_bit(c01, false, unused) == 1);

    // c = (1,1): phi = (1, -1, 1), w . phi = 3.5 -> bit 1.
    BitString c11 = BitString::ones(2);
    CHECK(inst.eval_bit(c11, false, unused) == 1);

    CHECK_THROWS_AS(inst.eval_bit(BitString::zeros(3), false, unused), std::invalid_argument);
}

TEST_CASE("noiseless evaluation is repeatable") {
    PufConfig cfg;
    cfg.device_seed = 777;
    PufInstance inst(cfg);
    Prng64 unused(0);
    auto seed_rn = default_seed();
    BitString first = inst.eval_response(seed_rn, false, unused);
    for (int i = 0; i < 100; ++i) CHECK(inst.eval_response(seed_rn, false, unused) == first);
    CHECK(first.size() == 127);
}

TEST_CASE("invocation counter tracks eval_response") {
    PufConfig cfg;
    PufInstance inst(cfg);
    Prng64 unused(0);
    inst.reset_invocation_count();
    CHECK(inst.invocation_count() == 0);
    inst.eval_response(default_seed(), false, unused);
    inst.eval_response(default_seed(), false, unused);
    CHECK(inst.invocation_count() == 2);
}

TEST_CASE("calibrated sigma reproduces the target bit error rate") {
    PufConfig cfg;
    cfg.device_seed = 31337;
    PufInstance inst(cfg);

    CHECK(calibrate_sigma(inst, 0.0) == 0.0);
    CHECK_THROWS_AS(calibrate_sigma(inst, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_sigma(inst, -0.1), std::invalid_argument);

    double sigma = calibrate_sigma(inst, 0.15);
    CHECK(sigma > 0.0);

    // Fresh Monte Carlo run with the returned sigma: BER within 0.15 +- 0.01.
    PufConfig noisy_cfg = cfg;
    noisy_cfg.sigma_noise = sigma;
    PufInstance noisy(noisy_cfg);
    Prng64 noise_rng(2024);
    Prng64 chal_rng(4048);
    std::size_t flips = 0, bits = 0;
    Prng64 unused(0);
    for (int r = 0; r < 160; ++r) {
        std::uint64_t words[2] = {chal_rng.next(), chal_rng.next()};
        BitString seed_rn = BitString::from_words(words, 128);
        BitString clean = noisy.eval_response(seed_rn, false, unused);
        BitString dirty = noisy.eval_response(seed_rn, true, noise_rng);
        flips += hamming_distance(clean, dirty);
        bits += clean.size();
    }
    double ber = static_cast<double>(flips) / static_cast<double>(bits);
    CHECK(ber == doctest::Approx(0.15).epsilon(0.067));  // within +-0.01 absolute
}

TEST_CASE("estimated BER is non-decreasing in sigma") {
    PufConfig cfg;
    cfg.device_seed = 5150;
    auto ber_at = [&cfg](double sigma) {
        PufConfig c = cfg;
        c.sigma_noise = sigma;
        PufInstance inst(c);
        Prng64 unused(0);
        Prng64 noise(42);  // same draws across sigmas
        Prng64 chal(43);
        std::size_t flips = 0, bits = 0;
        for (int r = 0; r < 60; ++r) {
            std::uint64_t words[2] = {chal.next(), chal.next()};
            BitString seed_rn = BitString::from_words(words, 128);
            flips += hamming_distance(inst.eval_response(seed_rn, false, unused),
                                      inst.eval_response(seed_rn, true, noise));
            bits += 127;
        }
        return static_cast<double>(flips) / static_cast<double>(bits);
    };
    double prev = ber_at(0.0);
    CHECK(prev == 0.0);
    for (double sigma : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        double cur = ber_at(sigma);
        CHECK(cur >= prev - 0.01);  // allow Monte Carlo jitter
        prev = cur;
    }
}

TEST_CASE("distinct devices disagree on about half the bits") {
    PufConfig a_cfg, b_cfg;
    a_cfg.device_seed = 1;
    b_cfg.device_seed = 2;
    PufInstance a(a_cfg), b(b_cfg);
    Prng64 unused(0);
    Prng64 chal(4242);
    std::size_t dist = 0, bits = 0;
    for (int r = 0; r < 500; ++r) {
        std::uint64_t words[2] = {chal.next(), chal.next()};
        BitString seed_rn = BitString::from_words(words, 128);
        dist += hamming_distance(a.eval_response(seed_rn, false, unused),
                                 b.eval_response(seed_rn, false, unused));
        bits += 127;
    }
    double frac = static_cast<double>(dist) / static_cast<double>(bits);
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);
}
