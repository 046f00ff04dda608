#include "pufrla/prng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pufrla {

SplitMixResult splitmix_next(std::uint64_t state) {
    std::uint64_t s = state + 0x9E3779B97F4A7C15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return {s, z ^ (z >> 31)};
}

std::uint64_t fold_seed(const BitString& s) {
    if (s.size() != 128) throw std::invalid_argument("fold_seed: seed must be 128 bits");
    return s.word64(0) ^ s.word64(1);
}

Prng64 seed_from_bits(const BitString& s) { return Prng64(fold_seed(s)); }

double standard_normal(Prng64& rng) {
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    double u1 = static_cast<double>((rng.next() >> 11) + 1) * kScale;
    double u2 = static_cast<double>(rng.next() >> 11) * kScale;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RnStream::RnStream(BitString seed, std::uint64_t m)
    : seed_(std::move(seed)), m_(m), prng_(fold_seed(seed_)) {
    if (m_ % 2 == 0) throw std::invalid_argument("RnStream: m must be odd");
}

BitString RnStream::next_rn() {
    std::uint64_t words[2];
    words[0] = prng_.next();
    words[1] = prng_.next();
    ++index_;
    return BitString::from_words(words, 128);
}

void RnStream::reset() {
    prng_ = Prng64(fold_seed(seed_));
    index_ = 0;
}

void RnStream::seek(std::uint64_t ordinal) {
    if (ordinal < index_) reset();
    while (index_ < ordinal) {
        prng_.next();
        prng_.next();
        ++index_;
    }
}

std::vector<std::uint64_t> shuffle_sequence(std::uint64_t key, std::size_t count) {
    if (count == 0) throw std::invalid_argument("shuffle_sequence: count must be >= 1");
    Prng64 prng(key);
    std::vector<std::uint64_t> nums(count);
    for (auto& n : nums) n = prng.next();
    return nums;
}

std::vector<BitString> subchallenges(const BitString& seed_rn, std::size_t count,
                                     std::size_t stage_len) {
    if (count == 0) throw std::invalid_argument("subchallenges: count must be >= 1");
    if (stage_len == 0 || stage_len > 128)
        throw std::invalid_argument("subchallenges: stage_len must be in 1..128");
    Prng64 prng = seed_from_bits(seed_rn);
    std::size_t words_per = (stage_len + 63) / 64;
    std::vector<BitString> out;
    out.reserve(count);
    std::vector<std::uint64_t> words(words_per);
    for (std::size_t i = 0; i < count; ++i) {
        for (auto& w : words) w = prng.next();
        out.push_back(BitString::from_words(words, stage_len));
    }
    return out;
}

BitString default_seed() { return BitString::from_hex(kDefaultSeedHex, 128); }

BitString scan_balanced_seed(std::uint64_t from, std::uint64_t m) {
    for (std::uint64_t k = from;; ++k) {
        std::uint64_t words[2] = {0, k};
        BitString candidate = BitString::from_words(words, 128);
        RnStream stream(candidate, m);
        bool ok = true;
        for (std::uint64_t i = 0; i <= m; ++i) {
            if (!balance_check(stream.next_rn())) {
                ok = false;
                break;
            }
        }
        if (ok) return candidate;
    }
}

}  // namespace pufrla
