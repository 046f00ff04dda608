#include "pufrla/bitstring.hpp"

#include <bit>
#include <stdexcept>

namespace pufrla {

namespace {

std::size_t byte_len(std::size_t bits) { return (bits + 7) / 8; }

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

void BitString::check_len(std::size_t len) {
    if (len == 0) throw std::invalid_argument("BitString: length must be positive");
    if (len > kMaxLen) throw std::invalid_argument("BitString: length exceeds 4096 bits");
}

BitString BitString::zeros(std::size_t len) {
    check_len(len);
    return BitString(len, std::vector<std::uint8_t>(byte_len(len), 0));
}

BitString BitString::ones(std::size_t len) {
    BitString r = zeros(len);
    for (std::size_t i = 0; i < len; ++i) r.set_bit(i, true);
    return r;
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes, std::size_t len) {
    check_len(len);
    if (bytes.size() != byte_len(len))
        throw std::invalid_argument("BitString::from_bytes: byte count mismatch");
    std::size_t pad = byte_len(len) * 8 - len;
    if (pad != 0 && (bytes.back() & ((1u << pad) - 1)) != 0)
        throw std::invalid_argument("BitString::from_bytes: nonzero padding bits");
    return BitString(len, std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
}

BitString BitString::from_hex(std::string_view hex, std::size_t len) {
    check_len(len);
    if (hex.size() != byte_len(len) * 2)
        throw std::invalid_argument("BitString::from_hex: hex length mismatch");
    std::vector<std::uint8_t> bytes(byte_len(len), 0);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        int hi = hex_digit(hex[2 * i]);
        int lo = hex_digit(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("BitString::from_hex: bad hex digit");
        bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return from_bytes(bytes, len);
}

BitString BitString::from_words(std::span<const std::uint64_t> words, std::size_t len) {
    check_len(len);
    if (words.size() * 64 < len)
        throw std::invalid_argument("BitString::from_words: not enough words");
    BitString r = zeros(len);
    for (std::size_t i = 0; i < len; ++i) {
        std::uint64_t w = words[i / 64];
        bool b = (w >> (63 - (i % 64))) & 1u;
        r.set_bit(i, b);
    }
    return r;
}

BitString BitString::from_u64(std::uint64_t value) {
    const std::uint64_t words[1] = {value};
    return from_words(words, 64);
}

bool BitString::bit(std::size_t pos) const {
    if (pos >= len_) throw std::out_of_range("BitString::bit: position out of range");
    return (bytes_[pos / 8] >> (7 - pos % 8)) & 1u;
}

void BitString::set_bit(std::size_t pos, bool value) {
    if (pos >= len_) throw std::out_of_range("BitString::set_bit: position out of range");
    std::uint8_t mask = static_cast<std::uint8_t>(1u << (7 - pos % 8));
    if (value)
        bytes_[pos / 8] |= mask;
    else
        bytes_[pos / 8] &= static_cast<std::uint8_t>(~mask);
}

std::size_t BitString::popcount() const {
    std::size_t total = 0;
    for (std::uint8_t b : bytes_) total += static_cast<std::size_t>(std::popcount(b));
    return total;
}

BitString BitString::operator^(const BitString& other) const {
    if (len_ != other.len_)
        throw std::invalid_argument("BitString: XOR of unequal lengths");
    std::vector<std::uint8_t> out(bytes_.size());
    for (std::size_t i = 0; i < bytes_.size(); ++i) out[i] = bytes_[i] ^ other.bytes_[i];
    return BitString(len_, std::move(out));
}

BitString BitString::complement() const {
    if (len_ == 0) throw std::invalid_argument("BitString::complement: empty");
    return *this ^ ones(len_);
}

BitString BitString::prefix(std::size_t nbits) const {
    if (nbits == 0 || nbits > len_)
        throw std::invalid_argument("BitString::prefix: bad length");
    BitString r = zeros(nbits);
    for (std::size_t i = 0; i < nbits; ++i) r.set_bit(i, bit(i));
    return r;
}

BitString BitString::concat(const BitString& other) const {
    BitString r = zeros(len_ + other.len_);
    for (std::size_t i = 0; i < len_; ++i) r.set_bit(i, bit(i));
    for (std::size_t i = 0; i < other.len_; ++i) r.set_bit(len_ + i, other.bit(i));
    return r;
}

std::uint64_t BitString::word64(std::size_t word_index) const {
    if ((word_index + 1) * 64 > len_)
        throw std::out_of_range("BitString::word64: word out of range");
    std::uint64_t w = 0;
    for (std::size_t i = 0; i < 8; ++i)
        w = w << 8 | bytes_[word_index * 8 + i];
    return w;
}

std::vector<std::uint8_t> BitString::to_bytes() const { return bytes_; }

std::string BitString::to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes_.size() * 2);
    for (std::uint8_t b : bytes_) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

BitString xor_bits(const BitString& a, const BitString& b) { return a ^ b; }

std::size_t hamming_distance(const BitString& a, const BitString& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("hamming_distance: unequal lengths");
    return (a ^ b).popcount();
}

bool balance_check(const BitString& n) {
    std::size_t len = n.size();
    std::size_t low = (3 * len + 9) / 10;  // ceil(0.3 * len)
    std::size_t pc = n.popcount();
    return pc >= low && pc + low <= len;
}

}  // namespace pufrla
