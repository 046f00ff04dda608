#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pufrla {

// Fixed-length bit vector. Bit position 0 is the leftmost / most
// significant bit; byte serialization packs position 0 into the MSB of
// byte 0 and zero-fills any unused trailing bits of the final byte.
// Instances are immutable in spirit: all operations return new values,
// and mixing lengths is a hard error.
class BitString {
public:
    static constexpr std::size_t kMaxLen = 4096;

    BitString() = default;  // empty sentinel, size() == 0

    static BitString zeros(std::size_t len);
    static BitString ones(std::size_t len);
    static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t len);
    static BitString from_hex(std::string_view hex, std::size_t len);
    // Packs the given 64-bit words MSB-first and truncates to len bits.
    static BitString from_words(std::span<const std::uint64_t> words, std::size_t len);
    static BitString from_u64(std::uint64_t value);  // 64-bit, MSB-first

    std::size_t size() const { return len_; }
    bool empty() const { return len_ == 0; }

    bool bit(std::size_t pos) const;            // pos in [0, len)
    void set_bit(std::size_t pos, bool value);  // pos in [0, len)

    std::size_t popcount() const;
    BitString operator^(const BitString& other) const;
    BitString complement() const;
    BitString prefix(std::size_t nbits) const;
    BitString concat(const BitString& other) const;

    // Big-endian 64-bit word at word index i (bits [64i, 64i+64));
    // requires len to cover the full word.
    std::uint64_t word64(std::size_t word_index) const;

    std::vector<std::uint8_t> to_bytes() const;
    std::string to_hex() const;  // lowercase, no prefix; canonical textual form

    bool operator==(const BitString& other) const = default;

    const std::vector<std::uint8_t>& raw_bytes() const { return bytes_; }

private:
    BitString(std::size_t len, std::vector<std::uint8_t> bytes)
        : len_(len), bytes_(std::move(bytes)) {}
    static void check_len(std::size_t len);

    std::size_t len_ = 0;
    std::vector<std::uint8_t> bytes_;  // ceil(len/8); pad bits always zero
};

BitString xor_bits(const BitString& a, const BitString& b);
std::size_t hamming_distance(const BitString& a, const BitString& b);

// True iff ceil(0.3*L) <= popcount <= L - ceil(0.3*L), L = n.size().
bool balance_check(const BitString& n);

}  // namespace pufrla
