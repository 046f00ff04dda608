#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pufrla/bitstring.hpp"

namespace pufrla {

// Maps a raw PRNG number into the swap range [1, i].
std::size_t range_map(std::uint64_t num, std::size_t i);

// The swap schedule of the modified Fisher-Yates shuffle: one target
// position j_i in [1, i] for each iteration i = L down to 2 (i = 1 is a
// forced no-op and is not stored). Positions are 1-indexed from the left.
class SwapSequence {
public:
    // Derives the schedule from a keyed number sequence: the iteration with
    // loop variable i consumes num_{L-i+1}, mapped through range_map.
    static SwapSequence from_key(std::uint64_t key, std::size_t len);

    // Builds the schedule from explicit j values ordered for i = L down
    // to 2 (len - 1 entries). A trailing entry for i = 1 may be included
    // and is ignored.
    static SwapSequence from_j_values(std::vector<std::size_t> j_values, std::size_t len);

    std::size_t length() const { return len_; }

    // j for iteration i, i in [2, L].
    std::size_t j_for(std::size_t i) const { return j_[len_ - i]; }

private:
    SwapSequence(std::size_t len, std::vector<std::size_t> j) : len_(len), j_(std::move(j)) {}

    std::size_t len_;
    std::vector<std::size_t> j_;  // j_[0] is for i = L, j_[len-2] for i = 2
};

// Applies the swap schedule to an ordered sequence of elements (i = L down
// to 2, swap positions j_i and i). Generic over element granularity so the
// tuple-level walkthrough is expressible; the protocol path uses single bits.
template <typename T>
std::vector<T> shuffle_with_sequence(std::vector<T> x, const SwapSequence& seq) {
    if (x.size() != seq.length())
        throw std::invalid_argument("shuffle_with_sequence: sequence length mismatch");
    for (std::size_t i = x.size(); i >= 2; --i)
        std::swap(x[seq.j_for(i) - 1], x[i - 1]);
    return x;
}

// Exact inverse: the same swaps in reverse order (i = 2 up to L).
template <typename T>
std::vector<T> deshuffle_with_sequence(std::vector<T> s, const SwapSequence& seq) {
    if (s.size() != seq.length())
        throw std::invalid_argument("deshuffle_with_sequence: sequence length mismatch");
    for (std::size_t i = 2; i <= s.size(); ++i)
        std::swap(s[seq.j_for(i) - 1], s[i - 1]);
    return s;
}

// Keyed bitwise shuffle/deshuffle. The permutation depends only on
// (key, x.size()).
BitString shuffle(const BitString& x, std::uint64_t key);
BitString deshuffle(const BitString& s, std::uint64_t key);

}  // namespace pufrla
