#include <doctest.h>

#include <random>
#include <stdexcept>

#include "pufrla/bitstring.hpp"

using namespace pufrla;

namespace {

BitString from_01(const std::string& s) {
    BitString b = BitString::zeros(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) b.set_bit(i, s[i] == '1');
    return b;
}

BitString random_bits(std::mt19937_64& gen, std::size_t len) {
    BitString b = BitString::zeros(len);
    for (std::size_t i = 0; i < len; ++i) b.set_bit(i, gen() & 1);
    return b;
}

}  // namespace

TEST_CASE("xor basics") {
    CHECK((from_01("1010") ^ from_01("0000")) == from_01("1010"));
    CHECK((from_01("1010") ^ from_01("1010")) == from_01("0000"));
    CHECK((from_01("1100") ^ from_01("1010")) == from_01("0110"));
    CHECK_THROWS_AS(from_01("101") ^ from_01("1010"), std::invalid_argument);
}

TEST_CASE("xor is self-inverse and commutative on random pairs") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = random_bits(gen, 128);
        auto b = random_bits(gen, 128);
        CHECK(((a ^ b) ^ b) == a);
        CHECK((a ^ b) == (b ^ a));
    }
}

TEST_CASE("hamming distance") {
    auto x = from_01("10110");
    CHECK(hamming_distance(x, x) == 0);
    CHECK(hamming_distance(from_01("0000"), from_01("1111")) == 4);
    CHECK_THROWS_AS(hamming_distance(from_01("00"), from_01("000")), std::invalid_argument);

    // Cross-check against the xor+popcount oracle.
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 1000; ++trial) {
        auto a = random_bits(gen, 64);
        auto b = random_bits(gen, 64);
        std::size_t expect = (a ^ b).popcount();
        CHECK(hamming_distance(a, b) == expect);
        CHECK(hamming_distance(a, b) == hamming_distance(b, a));
    }
}

TEST_CASE("hamming distance triangle inequality") {
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 300; ++trial) {
        auto a = random_bits(gen, 96);
        auto b = random_bits(gen, 96);
        auto c = random_bits(gen, 96);
        CHECK(hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c));
    }
}

TEST_CASE("balance check thresholds at L=128") {
    auto with_popcount = [](std::size_t pc) {
        BitString b = BitString::zeros(128);
        for (std::size_t i = 0; i < pc; ++i) b.set_bit(i, true);
        return b;
    };
    CHECK(balance_check(with_popcount(64)));
    CHECK_FALSE(balance_check(with_popcount(0)));
    CHECK_FALSE(balance_check(with_popcount(128)));
    // ceil(0.3 * 128) = 39 is the decided cutoff.
    CHECK_FALSE(balance_check(with_popcount(38)));
    CHECK(balance_check(with_popcount(39)));
    CHECK(balance_check(with_popcount(89)));
    CHECK_FALSE(balance_check(with_popcount(90)));
}

TEST_CASE("balance check is complement-symmetric") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 500; ++trial) {
        auto n = random_bits(gen, 128);
        CHECK(balance_check(n) == balance_check(n.complement()));
    }
}

TEST_CASE("byte serialization contract") {
    CHECK(from_01("10000000").to_bytes() == std::vector<std::uint8_t>{0x80});
    CHECK(from_01("10000000").to_hex() == "80");

    // Nonzero padding is a contract violation.
    std::uint8_t bad[] = {0x01};
    CHECK_THROWS_AS(BitString::from_bytes(bad, 7), std::invalid_argument);
    std::uint8_t ok[] = {0x02};
    CHECK(BitString::from_bytes(ok, 7).bit(6));

    // Wrong byte counts are rejected.
    std::uint8_t two[] = {0x00, 0x00};
    CHECK_THROWS_AS(BitString::from_bytes(two, 7), std::invalid_argument);
}

TEST_CASE("serialization round-trip identity for every len in 1..256") {
    std::mt19937_64 gen(19);
    for (std::size_t len = 1; len <= 256; ++len) {
        auto x = random_bits(gen, len);
        auto bytes = x.to_bytes();
        CHECK(BitString::from_bytes(bytes, len) == x);
        CHECK(BitString::from_hex(x.to_hex(), len) == x);
    }
}

TEST_CASE("round-trip on random 128-bit values") {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 1000; ++trial) {
        auto x = random_bits(gen, 128);
        CHECK(BitString::from_bytes(x.to_bytes(), 128) == x);
    }
}

TEST_CASE("length limits") {
    CHECK_THROWS_AS(BitString::zeros(0), std::invalid_argument);
    CHECK_THROWS_AS(BitString::zeros(4097), std::invalid_argument);
    CHECK(BitString::zeros(4096).size() == 4096);
}

TEST_CASE("word64 and from_words use big-endian word order") {
    std::uint64_t words[2] = {0x0123456789abcdefull, 0xfedcba9876543210ull};
    auto b = BitString::from_words(words, 128);
    CHECK(b.word64(0) == 0x0123456789abcdefull);
    CHECK(b.word64(1) == 0xfedcba9876543210ull);
    CHECK(b.to_hex() == "0123456789abcdeffedcba9876543210");

    auto trunc = BitString::from_words(words, 12);
    CHECK(trunc.to_hex() == "0120");  // leftmost 12 bits, zero-padded
}
