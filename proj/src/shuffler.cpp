#include "pufrla/shuffler.hpp"

#include "pufrla/prng.hpp"

namespace pufrla {

std::size_t range_map(std::uint64_t num, std::size_t i) {
    if (i == 0) throw std::invalid_argument("range_map: range bound must be >= 1");
    return static_cast<std::size_t>(num % i) + 1;
}

SwapSequence SwapSequence::from_key(std::uint64_t key, std::size_t len) {
    if (len == 0) throw std::invalid_argument("SwapSequence: length must be >= 1");
    if (len == 1) return SwapSequence(1, {});
    auto nums = shuffle_sequence(key, len);
    std::vector<std::size_t> j(len - 1);
    for (std::size_t i = len; i >= 2; --i)
        j[len - i] = range_map(nums[len - i], i);
    return SwapSequence(len, std::move(j));
}

SwapSequence SwapSequence::from_j_values(std::vector<std::size_t> j_values, std::size_t len) {
    if (len == 0) throw std::invalid_argument("SwapSequence: length must be >= 1");
    if (j_values.size() == len) j_values.pop_back();  // optional i = 1 no-op entry
    if (j_values.size() != len - 1)
        throw std::invalid_argument("SwapSequence: expected len - 1 swap targets");
    for (std::size_t i = len; i >= 2; --i) {
        std::size_t j = j_values[len - i];
        if (j < 1 || j > i)
            throw std::invalid_argument("SwapSequence: j out of range for its iteration");
    }
    return SwapSequence(len, std::move(j_values));
}

namespace {

BitString apply_bit_swaps(const BitString& x, const SwapSequence& seq, bool inverse) {
    BitString out = x;
    std::size_t len = x.size();
    auto swap_bits = [&out](std::size_t a, std::size_t b) {
        bool tmp = out.bit(a);
        out.set_bit(a, out.bit(b));
        out.set_bit(b, tmp);
    };
    if (!inverse) {
        for (std::size_t i = len; i >= 2; --i)
            swap_bits(seq.j_for(i) - 1, i - 1);
    } else {
        for (std::size_t i = 2; i <= len; ++i)
            swap_bits(seq.j_for(i) - 1, i - 1);
    }
    return out;
}

}  // namespace

BitString shuffle(const BitString& x, std::uint64_t key) {
    return apply_bit_swaps(x, SwapSequence::from_key(key, x.size()), false);
}

BitString deshuffle(const BitString& s, std::uint64_t key) {
    return apply_bit_swaps(s, SwapSequence::from_key(key, s.size()), true);
}

}  // namespace pufrla
