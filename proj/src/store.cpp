#include "pufrla/store.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pufrla {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() {
        auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | b[i];
        return v;
    }
    std::uint64_t u64() {
        auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
        return v;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        if (pos_ + n > data_.size()) throw std::runtime_error("database file truncated");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

// Absorb-then-squeeze PRF: XOR one big-endian word at a time into the
// SplitMix64 state (advancing it each time), then squeeze two outputs.
struct Absorber {
    std::uint64_t state;

    explicit Absorber(std::uint64_t key) : state(key) {}

    void absorb(std::uint64_t word) { state = splitmix_next(state ^ word).state; }

    void absorb_bytes(std::span<const std::uint8_t> bytes) {
        absorb(static_cast<std::uint64_t>(bytes.size()));
        for (std::size_t off = 0; off < bytes.size(); off += 8) {
            std::uint64_t w = 0;
            for (std::size_t i = 0; i < 8; ++i) {
                w <<= 8;
                if (off + i < bytes.size()) w |= bytes[off + i];
            }
            absorb(w);
        }
    }

    std::array<std::uint8_t, 16> squeeze16() {
        Prng64 prng(state);
        std::array<std::uint8_t, 16> out{};
        std::uint64_t hi = prng.next(), lo = prng.next();
        for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
        for (int i = 0; i < 8; ++i) out[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
        return out;
    }
};

void xor_keystream(std::uint64_t key, std::span<std::uint8_t> data) {
    Prng64 prng(key);
    std::size_t i = 0;
    while (i < data.size()) {
        std::uint64_t w = prng.next();
        for (int b = 0; b < 8 && i < data.size(); ++b, ++i)
            data[i] ^= static_cast<std::uint8_t>(w >> (56 - 8 * b));
    }
}

constexpr std::size_t kNonceBytes = 8;
constexpr std::size_t kTagBytes = 16;
constexpr char kMagic[4] = {'P', 'R', 'L', 'A'};

}  // namespace

KeyTriple derive_keys(const MasterSecret& ms) {
    Prng64 prng = seed_from_bits(ms.ms);
    KeyTriple keys{};
    keys.k_idx = prng.next();
    keys.k_enc = prng.next();
    keys.k_mac = prng.next();
    return keys;
}

IndexKey prf_index(std::uint64_t k_idx, const BitString& x) {
    if (x.size() != 128) throw std::invalid_argument("prf_index: input must be 128 bits");
    Absorber a(k_idx);
    a.absorb(x.word64(0));
    a.absorb(x.word64(1));
    return a.squeeze16();
}

std::vector<std::uint8_t> seal(std::uint64_t k_enc, std::uint64_t k_mac,
                               std::span<const std::uint8_t> plaintext, Prng64& rng) {
    std::uint64_t nonce = rng.next();
    std::vector<std::uint8_t> out;
    out.reserve(kNonceBytes + plaintext.size() + kTagBytes);
    put_u64(out, nonce);
    out.insert(out.end(), plaintext.begin(), plaintext.end());
    xor_keystream(k_enc ^ nonce, std::span<std::uint8_t>(out).subspan(kNonceBytes));

    Absorber mac(k_mac);
    mac.absorb_bytes(std::span<const std::uint8_t>(out));
    auto tag = mac.squeeze16();
    out.insert(out.end(), tag.begin(), tag.end());
    return out;
}

std::optional<std::vector<std::uint8_t>> open_sealed(std::uint64_t k_enc, std::uint64_t k_mac,
                                                     std::span<const std::uint8_t> sealed) {
    if (sealed.size() < kNonceBytes + kTagBytes) return std::nullopt;
    auto body = sealed.first(sealed.size() - kTagBytes);
    auto tag = sealed.subspan(sealed.size() - kTagBytes);

    Absorber mac(k_mac);
    mac.absorb_bytes(body);
    auto expect = mac.squeeze16();
    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < kTagBytes; ++i) diff |= expect[i] ^ tag[i];
    if (diff != 0) return std::nullopt;

    std::uint64_t nonce = 0;
    for (std::size_t i = 0; i < kNonceBytes; ++i) nonce = nonce << 8 | body[i];
    std::vector<std::uint8_t> plain(body.begin() + kNonceBytes, body.end());
    xor_keystream(k_enc ^ nonce, plain);
    return plain;
}

std::vector<std::uint8_t> RecordPlain::serialize() const {
    if (s.size() != 128 || rs.size() != 127 || help.size() != 127)
        throw std::invalid_argument("RecordPlain: field length mismatch");
    std::vector<std::uint8_t> out;
    out.reserve(kBytes);
    put_u64(out, counter2);
    auto append = [&out](const BitString& b) {
        auto bytes = b.to_bytes();
        out.insert(out.end(), bytes.begin(), bytes.end());
    };
    append(s);
    append(rs);
    append(help);
    return out;
}

RecordPlain RecordPlain::parse(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kBytes) throw std::runtime_error("RecordPlain: bad payload length");
    Reader r(bytes);
    RecordPlain rec;
    rec.counter2 = r.u64();
    rec.s = BitString::from_bytes(r.take(16), 128);
    rec.rs = BitString::from_bytes(r.take(16), 127);
    rec.help = BitString::from_bytes(r.take(16), 127);
    return rec;
}

void Database::add_device(std::uint64_t device_id) { devices_.try_emplace(device_id); }

bool Database::has_device(std::uint64_t device_id) const {
    return devices_.contains(device_id);
}

std::vector<std::uint64_t> Database::device_ids() const {
    std::vector<std::uint64_t> ids;
    ids.reserve(devices_.size());
    for (const auto& [id, _] : devices_) ids.push_back(id);
    return ids;
}

std::size_t Database::row_count(std::uint64_t device_id) const {
    return rows(device_id).size();
}

const std::map<IndexKey, DbRow>& Database::rows(std::uint64_t device_id) const {
    auto it = devices_.find(device_id);
    if (it == devices_.end()) throw std::out_of_range("Database: unknown device");
    return it->second;
}

void Database::put(std::uint64_t device_id, DbRow row) {
    auto it = devices_.find(device_id);
    if (it == devices_.end()) throw std::out_of_range("Database: unknown device");
    it->second.insert_or_assign(row.index_key, std::move(row));
}

std::optional<DbRow> Database::get(std::uint64_t device_id, const IndexKey& key) const {
    const auto& m = rows(device_id);
    auto it = m.find(key);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

std::vector<std::uint8_t> Database::serialize() const {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kVersion);
    out.push_back(kSuiteId);
    put_u32(out, static_cast<std::uint32_t>(devices_.size()));
    for (const auto& [id, m] : devices_) {
        put_u64(out, id);
        put_u32(out, static_cast<std::uint32_t>(m.size()));
        for (const auto& [key, row] : m) {
            out.insert(out.end(), key.begin(), key.end());
            if (row.sealed_payload.size() != kNonceBytes + RecordPlain::kBytes + kTagBytes)
                throw std::logic_error("Database: unexpected sealed row size");
            out.insert(out.end(), row.sealed_payload.begin(), row.sealed_payload.end());
        }
    }
    return out;
}

Database Database::deserialize(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    auto magic = r.take(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw std::runtime_error("database file: bad magic");
    if (r.u8() != kVersion) throw std::runtime_error("database file: unsupported version");
    if (r.u8() != kSuiteId) throw std::runtime_error("database file: unsupported cipher suite");
    Database db;
    std::uint32_t devices = r.u32();
    for (std::uint32_t d = 0; d < devices; ++d) {
        std::uint64_t id = r.u64();
        db.add_device(id);
        std::uint32_t count = r.u32();
        for (std::uint32_t i = 0; i < count; ++i) {
            DbRow row;
            auto key = r.take(16);
            std::copy(key.begin(), key.end(), row.index_key.begin());
            auto payload = r.take(kNonceBytes + RecordPlain::kBytes + kTagBytes);
            row.sealed_payload.assign(payload.begin(), payload.end());
            db.put(id, std::move(row));
        }
    }
    if (!r.done()) throw std::runtime_error("database file: trailing bytes");
    return db;
}

void Database::save(const std::string& path) const {
    auto bytes = serialize();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("Database::save: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("Database::save: write failed");
}

Database Database::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("Database::load: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace pufrla
