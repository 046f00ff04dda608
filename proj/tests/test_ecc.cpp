#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <numeric>
#include <random>

#include "pufrla/ecc.hpp"

using namespace pufrla;

namespace {

const BchCode& code() {
    static BchCode c = BchCode::build();
    return c;
}

BitString random_message(std::mt19937_64& gen) {
    BitString m = BitString::zeros(BchCode::kK);
    for (std::size_t i = 0; i < BchCode::kK; ++i) m.set_bit(i, gen() & 1);
    return m;
}

BitString random_error(std::mt19937_64& gen, std::size_t weight) {
    std::vector<std::size_t> positions(BchCode::kN);
    std::iota(positions.begin(), positions.end(), 0);
    std::shuffle(positions.begin(), positions.end(), gen);
    BitString e = BitString::zeros(BchCode::kN);
    for (std::size_t i = 0; i < weight; ++i) e.set_bit(positions[i], true);
    return e;
}

}  // namespace

TEST_CASE("field basics") {
    const GfContext& gf = code().field();
    CHECK(gf.mul(0x02, 0x02) == 0x04);
    CHECK(gf.mul(0x40, 0x02) == 0x09);  // x^7 == x^3 + 1 under 0x89
    CHECK(gf.mul(0x55, 1) == 0x55);
    CHECK(gf.mul(0x55, 0) == 0);
    CHECK_THROWS_AS(gf.mul(0x80, 1), std::invalid_argument);

    for (int a = 1; a < 128; ++a)
        CHECK(gf.mul(static_cast<std::uint8_t>(a), gf.inv(static_cast<std::uint8_t>(a))) == 1);
}

TEST_CASE("alpha generates all nonzero elements") {
    const GfContext& gf = code().field();
    std::vector<bool> seen(128, false);
    for (int e = 0; e < 127; ++e) {
        std::uint8_t v = gf.pow_alpha(e);
        CHECK(v != 0);
        CHECK_FALSE(seen[v]);
        seen[v] = true;
    }
    CHECK(gf.pow_alpha(127) == 1);
}

TEST_CASE("generator polynomial structure") {
    const auto& g = code().generator();
    CHECK(g.size() == 113);  // degree 112
    CHECK(g.front() == 1);
    CHECK(g.back() == 1);

    // g divides x^127 + 1: long division over GF(2) leaves no remainder.
    std::vector<std::uint8_t> dividend(128, 0);
    dividend[0] = 1;
    dividend[127] = 1;
    for (std::size_t d = 127; d >= 112; --d) {
        if (!dividend[d]) continue;
        for (std::size_t j = 0; j < g.size(); ++j) dividend[d - 112 + j] ^= g[j];
    }
    for (std::size_t d = 0; d < 112; ++d) CHECK(dividend[d] == 0);

    // g(alpha^i) == 0 for all designed roots i = 1..54.
    const GfContext& gf = code().field();
    for (int i = 1; i <= 54; ++i) {
        std::uint8_t acc = 0;
        for (std::size_t d = 0; d < g.size(); ++d)
            if (g[d]) acc ^= gf.pow_alpha(i * static_cast<int>(d));
        CHECK(acc == 0);
    }
}

TEST_CASE("encoding is systematic and linear") {
    CHECK(code().encode(BitString::zeros(15)) == BitString::zeros(127));
    CHECK_THROWS_AS(code().encode(BitString::zeros(14)), std::invalid_argument);

    std::mt19937_64 gen(43);
    for (int trial = 0; trial < 1000; ++trial) {
        auto m1 = random_message(gen);
        auto m2 = random_message(gen);
        CHECK((code().encode(m1) ^ code().encode(m2)) == code().encode(m1 ^ m2));
    }

    // Message appears verbatim in the leftmost k positions.
    auto m = random_message(gen);
    auto cw = code().encode(m);
    for (std::size_t i = 0; i < BchCode::kK; ++i) CHECK(cw.bit(i) == m.bit(i));
}

TEST_CASE("syndromes of codewords vanish") {
    std::mt19937_64 gen(47);
    for (int trial = 0; trial < 1000; ++trial) {
        auto syn = code().syndromes(code().encode(random_message(gen)));
        for (std::uint8_t s : syn) CHECK(s == 0);
    }
}

TEST_CASE("decode is the identity on clean codewords") {
    std::mt19937_64 gen(53);
    for (int trial = 0; trial < 50; ++trial) {
        auto cw = code().encode(random_message(gen));
        auto out = code().decode(cw);
        REQUIRE(out.has_value());
        CHECK(*out == cw);
    }
}

TEST_CASE("flip-decode-compare oracle at full weight t=27") {
    std::mt19937_64 gen(59);
    for (int trial = 0; trial < 200; ++trial) {
        auto cw = code().encode(random_message(gen));
        auto corrupted = cw ^ random_error(gen, 27);
        auto out = code().decode(corrupted);
        REQUIRE(out.has_value());
        CHECK(*out == cw);
    }
}

TEST_CASE("every error weight up to t corrects") {
    std::mt19937_64 gen(61);
    for (std::size_t w = 0; w <= 27; ++w) {
        auto cw = code().encode(random_message(gen));
        auto out = code().decode(cw ^ random_error(gen, w));
        REQUIRE(out.has_value());
        CHECK(*out == cw);
    }
}

TEST_CASE("weight-60 errors never silently pass as the original") {
    std::mt19937_64 gen(67);
    for (int trial = 0; trial < 200; ++trial) {
        auto cw = code().encode(random_message(gen));
        auto out = code().decode(cw ^ random_error(gen, 60));
        if (out) CHECK(*out != cw);  // a miscorrection is fine, silence is not
    }
}

TEST_CASE("helper data round trip") {
    std::mt19937_64 gen(71);
    Prng64 rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        BitString r = BitString::zeros(127);
        for (std::size_t i = 0; i < 127; ++i) r.set_bit(i, gen() & 1);
        auto help = helper_gen(code(), r, rng);
        CHECK(help.mask.size() == 127);
        auto back = recover(code(), help, r);
        REQUIRE(back.has_value());
        CHECK(*back == r);
    }

    // Fresh helper calls draw fresh masking codewords.
    BitString r = BitString::ones(127);
    auto h1 = helper_gen(code(), r, rng);
    auto h2 = helper_gen(code(), r, rng);
    CHECK(h1.mask != h2.mask);
}

TEST_CASE("recover fixes up to 27 flips and reports heavier damage") {
    std::mt19937_64 gen(73);
    Prng64 rng(100);
    BitString r = BitString::zeros(127);
    for (std::size_t i = 0; i < 127; ++i) r.set_bit(i, gen() & 1);
    auto help = helper_gen(code(), r, rng);

    auto recovered = recover(code(), help, r ^ random_error(gen, 27));
    REQUIRE(recovered.has_value());
    CHECK(*recovered == r);

    int hard_failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto out = recover(code(), help, r ^ random_error(gen, 40));
        if (!out)
            ++hard_failures;
        else
            CHECK(*out != r);  // never accepted as the enrolled response
    }
    CHECK(hard_failures > 0);
}

TEST_CASE("helper/recover Monte Carlo across weights") {
    std::mt19937_64 gen(79);
    Prng64 rng(101);
    for (int trial = 0; trial < 300; ++trial) {
        BitString r = BitString::zeros(127);
        for (std::size_t i = 0; i < 127; ++i) r.set_bit(i, gen() & 1);
        auto help = helper_gen(code(), r, rng);
        std::size_t w = gen() % 28;
        auto out = recover(code(), help, r ^ random_error(gen, w));
        REQUIRE(out.has_value());
        CHECK(*out == r);
    }
}
