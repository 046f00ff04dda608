#include "pufrla/ecc.hpp"

#include <stdexcept>

namespace pufrla {

GfContext::GfContext() {
    log_.fill(-1);
    std::uint8_t p = 1;
    for (int e = 0; e < kOrder; ++e) {
        antilog_[e] = p;
        log_[p] = e;
        p = static_cast<std::uint8_t>(p << 1);
        if (p & 0x80) p ^= kPrimPoly;
    }
}

std::uint8_t GfContext::mul(std::uint8_t a, std::uint8_t b) const {
    if (a >= kNumElements || b >= kNumElements)
        throw std::invalid_argument("GfContext::mul: element out of range");
    if (a == 0 || b == 0) return 0;
    return antilog_[(log_[a] + log_[b]) % kOrder];
}

std::uint8_t GfContext::inv(std::uint8_t a) const {
    if (a == 0 || a >= kNumElements)
        throw std::invalid_argument("GfContext::inv: element not invertible");
    return antilog_[(kOrder - log_[a]) % kOrder];
}

std::uint8_t GfContext::pow_alpha(int e) const {
    int r = e % kOrder;
    if (r < 0) r += kOrder;
    return antilog_[r];
}

int GfContext::log_alpha(std::uint8_t a) const {
    if (a == 0 || a >= kNumElements)
        throw std::invalid_argument("GfContext::log_alpha: zero has no logarithm");
    return log_[a];
}

BchCode BchCode::build() {
    BchCode code;
    const GfContext& gf = code.gf_;

    // Generator = product of the minimal polynomials of alpha^1..alpha^{2t},
    // one per cyclotomic coset of powers of 2 mod 127.
    std::array<bool, GfContext::kOrder> covered{};
    std::vector<std::uint8_t> gen{1};  // GF(2) coefficients, index = power
    for (int i = 1; i <= 2 * static_cast<int>(kT); ++i) {
        if (covered[i]) continue;
        std::vector<int> coset;
        int e = i;
        do {
            coset.push_back(e);
            covered[e] = true;
            e = (e * 2) % GfContext::kOrder;
        } while (e != i);

        // Minimal polynomial: product over the coset of (x + alpha^e),
        // computed in GF(2^7); the result must collapse to GF(2).
        std::vector<std::uint8_t> minimal{1};
        for (int exp : coset) {
            std::uint8_t root = gf.pow_alpha(exp);
            std::vector<std::uint8_t> next(minimal.size() + 1, 0);
            for (std::size_t d = 0; d < minimal.size(); ++d) {
                next[d + 1] ^= minimal[d];
                next[d] ^= gf.mul(minimal[d], root);
            }
            minimal = std::move(next);
        }
        for (std::uint8_t c : minimal)
            if (c > 1) throw std::logic_error("BchCode: minimal polynomial not binary");

        std::vector<std::uint8_t> product(gen.size() + minimal.size() - 1, 0);
        for (std::size_t a = 0; a < gen.size(); ++a) {
            if (!gen[a]) continue;
            for (std::size_t b = 0; b < minimal.size(); ++b)
                product[a + b] ^= static_cast<std::uint8_t>(gen[a] & minimal[b]);
        }
        gen = std::move(product);
    }
    if (gen.size() != kN - kK + 1)
        throw std::logic_error("BchCode: generator degree mismatch");
    code.generator_ = std::move(gen);
    return code;
}

namespace {

// BitString position p <-> coefficient of x^(n-1-p).
BitString from_coeffs(const std::vector<std::uint8_t>& c) {
    BitString word = BitString::zeros(BchCode::kN);
    for (std::size_t p = 0; p < BchCode::kN; ++p)
        word.set_bit(p, c[BchCode::kN - 1 - p] != 0);
    return word;
}

}  // namespace

BitString BchCode::encode(const BitString& msg) const {
    if (msg.size() != kK) throw std::invalid_argument("BchCode::encode: message must be k bits");

    // msg * x^(n-k), then append the division remainder as parity.
    std::vector<std::uint8_t> work(kN, 0);
    for (std::size_t p = 0; p < kK; ++p)
        work[kN - 1 - p] = msg.bit(p) ? 1 : 0;

    const std::size_t gdeg = kN - kK;
    for (std::size_t d = kN; d-- > gdeg;) {
        if (!work[d]) continue;
        for (std::size_t j = 0; j <= gdeg; ++j)
            work[d - gdeg + j] ^= generator_[j];
    }
    // Low-degree part of work now holds the remainder; re-add the message.
    for (std::size_t p = 0; p < kK; ++p)
        work[kN - 1 - p] = msg.bit(p) ? 1 : 0;
    return from_coeffs(work);
}

std::array<std::uint8_t, 2 * BchCode::kT> BchCode::syndromes(const BitString& word) const {
    if (word.size() != kN) throw std::invalid_argument("BchCode::syndromes: word must be n bits");
    std::array<std::uint8_t, 2 * kT> syn{};
    for (std::size_t p = 0; p < kN; ++p) {
        if (!word.bit(p)) continue;
        int e = static_cast<int>(kN - 1 - p);
        for (std::size_t i = 0; i < syn.size(); ++i)
            syn[i] ^= gf_.pow_alpha(static_cast<int>(i + 1) * e);
    }
    return syn;
}

std::optional<BitString> BchCode::decode(const BitString& word) const {
    if (word.size() != kN) throw std::invalid_argument("BchCode::decode: word must be n bits");
    auto syn = syndromes(word);
    bool clean = true;
    for (std::uint8_t s : syn)
        if (s) { clean = false; break; }
    if (clean) return word;

    // Berlekamp-Massey over GF(2^7): error locator lambda(x).
    std::vector<std::uint8_t> lambda{1}, prev{1};
    std::size_t L = 0, m = 1;
    std::uint8_t b = 1;
    for (std::size_t step = 0; step < syn.size(); ++step) {
        std::uint8_t d = syn[step];
        for (std::size_t i = 1; i <= L && i < lambda.size(); ++i)
            d ^= gf_.mul(lambda[i], syn[step - i]);
        if (d == 0) {
            ++m;
            continue;
        }
        std::uint8_t coef = gf_.mul(d, gf_.inv(b));
        std::vector<std::uint8_t> next = lambda;
        if (next.size() < prev.size() + m) next.resize(prev.size() + m, 0);
        for (std::size_t i = 0; i < prev.size(); ++i)
            next[i + m] ^= gf_.mul(coef, prev[i]);
        if (2 * L <= step) {
            prev = lambda;
            b = d;
            L = step + 1 - L;
            m = 1;
        } else {
            ++m;
        }
        lambda = std::move(next);
    }
    while (!lambda.empty() && lambda.back() == 0) lambda.pop_back();
    if (L > kT || lambda.size() != L + 1) return std::nullopt;

    // Chien search: an error sits at power e iff lambda(alpha^{-e}) == 0.
    std::vector<int> error_powers;
    for (int e = 0; e < static_cast<int>(kN); ++e) {
        std::uint8_t acc = 0;
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            if (!lambda[i]) continue;
            acc ^= gf_.mul(lambda[i], gf_.pow_alpha(-e * static_cast<int>(i)));
        }
        if (acc == 0) error_powers.push_back(e);
    }
    if (error_powers.size() != L) return std::nullopt;

    BitString corrected = word;
    for (int e : error_powers) {
        std::size_t p = kN - 1 - static_cast<std::size_t>(e);
        corrected.set_bit(p, !corrected.bit(p));
    }
    for (std::uint8_t s : syndromes(corrected))
        if (s) return std::nullopt;
    return corrected;
}

HelperData helper_gen(const BchCode& code, const BitString& response, Prng64& rng) {
    if (response.size() != code.n())
        throw std::invalid_argument("helper_gen: response must be n bits");
    std::uint64_t words[1] = {rng.next()};
    BitString msg = BitString::from_words(words, code.k());
    return HelperData{response ^ code.encode(msg)};
}

std::optional<BitString> recover(const BchCode& code, const HelperData& help,
                                 const BitString& noisy) {
    if (noisy.size() != code.n() || help.mask.size() != code.n())
        throw std::invalid_argument("recover: length mismatch");
    auto decoded = code.decode(noisy ^ help.mask);
    if (!decoded) return std::nullopt;
    return *decoded ^ help.mask;
}

}  // namespace pufrla
