#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pufrla/bitstring.hpp"
#include "pufrla/prng.hpp"

namespace pufrla {

// GF(2^7) arithmetic under the primitive polynomial x^7 + x^3 + 1 (0x89),
// with alpha = 0x02 as the generator of the 127 nonzero elements.
class GfContext {
public:
    static constexpr int kFieldBits = 7;
    static constexpr int kOrder = 127;          // multiplicative order
    static constexpr int kNumElements = 128;
    static constexpr std::uint8_t kPrimPoly = 0x89;

    GfContext();

    std::uint8_t mul(std::uint8_t a, std::uint8_t b) const;
    std::uint8_t inv(std::uint8_t a) const;
    std::uint8_t pow_alpha(int e) const;  // alpha^e, e taken mod 127
    int log_alpha(std::uint8_t a) const;  // a != 0

private:
    std::array<std::uint8_t, kOrder> antilog_{};
    std::array<int, kNumElements> log_{};
};

// The binary BCH code (n, k, t) = (127, 15, 27). The generator polynomial
// is the lcm of the minimal polynomials of alpha^1..alpha^54 and has degree
// n - k = 112, so t/n = 27/127 ~ 21.3% of a word is correctable.
//
// Bit convention: BitString position 0 (leftmost) carries the coefficient
// of x^(n-1); encoding is systematic with the message in the leftmost k bits.
class BchCode {
public:
    static constexpr std::size_t kN = 127;
    static constexpr std::size_t kK = 15;
    static constexpr std::size_t kT = 27;

    static BchCode build();

    std::size_t n() const { return kN; }
    std::size_t k() const { return kK; }
    std::size_t t() const { return kT; }
    const GfContext& field() const { return gf_; }

    // Generator coefficients over GF(2), index = power, degree n - k.
    const std::vector<std::uint8_t>& generator() const { return generator_; }

    BitString encode(const BitString& msg) const;

    // Corrects up to t errors; nullopt when the word is undecodable.
    std::optional<BitString> decode(const BitString& word) const;

    // S_i = word(alpha^i) for i = 1..2t.
    std::array<std::uint8_t, 2 * kT> syndromes(const BitString& word) const;

private:
    BchCode() = default;

    GfContext gf_;
    std::vector<std::uint8_t> generator_;
};

// Code-offset helper data: mask = response XOR (random codeword).
struct HelperData {
    BitString mask;  // n bits
};

HelperData helper_gen(const BchCode& code, const BitString& response, Prng64& rng);

// Recovers the enrolled response from a noisy reading: decodes
// (noisy XOR mask) and re-applies the mask. nullopt on decode failure,
// which must be treated as an authentication reject upstream.
std::optional<BitString> recover(const BchCode& code, const HelperData& help,
                                 const BitString& noisy);

}  // namespace pufrla
