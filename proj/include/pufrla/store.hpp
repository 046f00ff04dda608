#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pufrla/bitstring.hpp"
#include "pufrla/prng.hpp"

namespace pufrla {

// The key the server would regenerate from its weak PUF; here a configured
// 128-bit secret. Never written into the database file.
struct MasterSecret {
    BitString ms;  // 128 bits

    static MasterSecret from_hex(std::string_view hex) {
        return MasterSecret{BitString::from_hex(hex, 128)};
    }
};

struct KeyTriple {
    std::uint64_t k_idx;
    std::uint64_t k_enc;
    std::uint64_t k_mac;
};

// k_idx, k_enc, k_mac = first three SplitMix64 outputs from fold(ms).
KeyTriple derive_keys(const MasterSecret& ms);

using IndexKey = std::array<std::uint8_t, 16>;

// Deterministic keyed PRF over a 128-bit input; the database's first
// column. Determinism is what makes the encrypted-index lookup work.
IndexKey prf_index(std::uint64_t k_idx, const BitString& x);

// Simulation-grade sealed box: 8-byte random nonce, SplitMix64 keystream
// XOR (stream seeded k_enc ^ nonce), and a PRF tag over nonce || ciphertext.
// Layout: nonce(8) || ciphertext || tag(16).
std::vector<std::uint8_t> seal(std::uint64_t k_enc, std::uint64_t k_mac,
                               std::span<const std::uint8_t> plaintext, Prng64& rng);
std::optional<std::vector<std::uint8_t>> open_sealed(std::uint64_t k_enc, std::uint64_t k_mac,
                                                     std::span<const std::uint8_t> sealed);

// One enrollment record: Counter_2(8, big-endian) || S(16) || Rs(16, 127
// bits + zero pad) || Help(16, 127 bits + zero pad) = 56 bytes of plaintext.
struct RecordPlain {
    std::uint64_t counter2;
    BitString s;     // 128 bits
    BitString rs;    // 127 bits
    BitString help;  // 127 bits

    static constexpr std::size_t kBytes = 56;
    std::vector<std::uint8_t> serialize() const;
    static RecordPlain parse(std::span<const std::uint8_t> bytes);  // throws on bad layout
};

struct DbRow {
    IndexKey index_key;
    std::vector<std::uint8_t> sealed_payload;  // 8 + 56 + 16 = 80 bytes

    bool operator==(const DbRow&) const = default;
};

// The server's CRP database: per device, an exact-match map from index
// token to sealed row. Sessions only ever read; enrollment writes.
class Database {
public:
    static constexpr std::uint8_t kVersion = 1;
    static constexpr std::uint8_t kSuiteId = 1;  // splitmix keystream + PRF tag

    void add_device(std::uint64_t device_id);
    bool has_device(std::uint64_t device_id) const;
    std::vector<std::uint64_t> device_ids() const;
    std::size_t row_count(std::uint64_t device_id) const;

    void put(std::uint64_t device_id, DbRow row);  // throws on unknown device
    std::optional<DbRow> get(std::uint64_t device_id, const IndexKey& key) const;

    std::vector<std::uint8_t> serialize() const;
    static Database deserialize(std::span<const std::uint8_t> bytes);

    void save(const std::string& path) const;
    static Database load(const std::string& path);

    bool operator==(const Database&) const = default;

    const std::map<IndexKey, DbRow>& rows(std::uint64_t device_id) const;

private:
    std::map<std::uint64_t, std::map<IndexKey, DbRow>> devices_;
};

}  // namespace pufrla
