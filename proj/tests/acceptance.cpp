// Acceptance suite: one self-contained check per shipped claim, one
// PASS/FAIL line each, nonzero exit when anything fails. Criterion 9 spawns
// the CLI binary twice; pass its path as argv[1] (defaults to ./pufrla next
// to this binary).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pufrla/harness.hpp"
#include "pufrla/protocol.hpp"
#include "pufrla/shuffler.hpp"

using namespace pufrla;

namespace {

struct Criterion {
    int number;
    std::string name;
    bool passed;
    std::string detail;
    double seconds;
};

std::vector<Criterion> g_results;

template <typename Fn>
void run_criterion(int number, const std::string& name, Fn&& fn) {
    auto start = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
        detail = fn(ok);
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    g_results.push_back({number, name, ok, detail, secs});
    std::printf("CRITERION %d %-28s %s  (%.2fs)  %s\n", number, name.c_str(),
                ok ? "PASS" : "FAIL", secs, detail.c_str());
    std::fflush(stdout);
}

MasterSecret test_secret() {
    return MasterSecret{BitString::from_hex("202122232425262728292a2b2c2d2e2f", 128)};
}

// High-entropy id: its big-endian encoding in the file header cannot alias
// the small counter2 values the plaintext scan hunts for.
constexpr std::uint64_t kDeviceId = 0x7D4E5F6A8B9CAD01ull;

SystemUnderTest default_system(std::uint64_t m, std::uint64_t device_seed = 0xACCE5501) {
    ProtocolConfig config = ProtocolConfig::defaults();
    config.m = m;
    PufConfig puf_config;
    puf_config.device_seed = device_seed;
    return make_system(config, puf_config, test_secret(), kDeviceId, /*seal_seed=*/4242);
}

// --- criterion bodies -------------------------------------------------------

std::string criterion1_fig4(bool& ok) {
    std::vector<std::string> tuples = {"10", "01", "11", "00", "11", "10"};
    auto seq = SwapSequence::from_j_values({1, 2, 3, 2, 1, 1}, 6);
    auto shuffled = shuffle_with_sequence(tuples, seq);
    std::string flat;
    for (const auto& t : shuffled) flat += t;
    unsigned long shuffled_value = std::stoul(flat, nullptr, 2);

    auto restored = deshuffle_with_sequence(shuffled, seq);
    std::string back;
    for (const auto& t : restored) back += t;
    unsigned long restored_value = std::stoul(back, nullptr, 2);

    ok = flat == "001011110110" && shuffled_value == 758 && restored_value == 2510;
    std::ostringstream detail;
    detail << "2510 -> " << shuffled_value << " -> " << restored_value;
    return detail.str();
}

std::string criterion2_bijectivity(bool& ok) {
    std::size_t failures = 0;

    // Exhaustive: L=4, all 16 inputs, 64 keys.
    for (std::uint64_t key = 0; key < 64; ++key) {
        std::set<std::string> images;
        for (unsigned v = 0; v < 16; ++v) {
            BitString x = BitString::zeros(4);
            for (int b = 0; b < 4; ++b)
                x.set_bit(static_cast<std::size_t>(b), (v >> (3 - b)) & 1);
            BitString s = shuffle(x, key);
            images.insert(s.to_hex());
            if (deshuffle(s, key) != x) ++failures;
        }
        if (images.size() != 16) ++failures;
    }

    // 10,000 random (x, key) round trips at L=128.
    std::mt19937_64 gen(20240901);
    for (int trial = 0; trial < 10000; ++trial) {
        std::uint64_t words[2] = {gen(), gen()};
        BitString x = BitString::from_words(words, 128);
        std::uint64_t key = gen();
        if (deshuffle(shuffle(x, key), key) != x) ++failures;
    }

    ok = failures == 0;
    return "failures=" + std::to_string(failures);
}

std::string criterion3_bch(bool& ok) {
    BchCode code = BchCode::build();
    std::mt19937_64 gen(313);
    std::size_t failures = 0;

    for (int trial = 0; trial < 1000; ++trial) {
        BitString msg = BitString::zeros(127 - 112);
        for (std::size_t i = 0; i < msg.size(); ++i) msg.set_bit(i, gen() & 1);
        BitString cw = code.encode(msg);

        std::vector<std::size_t> positions(127);
        for (std::size_t i = 0; i < 127; ++i) positions[i] = i;
        std::shuffle(positions.begin(), positions.end(), gen);
        BitString corrupted = cw;
        for (std::size_t i = 0; i < 27; ++i)
            corrupted.set_bit(positions[i], !corrupted.bit(positions[i]));

        auto decoded = code.decode(corrupted);
        if (!decoded || *decoded != cw) ++failures;
        if (trial < 50) {
            auto clean = code.decode(cw);
            if (!clean || *clean != cw) ++failures;
        }
    }

    double ratio = static_cast<double>(code.t()) / static_cast<double>(code.n());
    ok = failures == 0 && ratio >= 0.20;
    std::ostringstream detail;
    detail << "weight-27 decode failures=" << failures << ", t/n=" << ratio;
    return detail.str();
}

std::string criterion4_reliability(bool& ok) {
    auto sut = default_system(9999);

    auto clean = run_rounds(sut, 500, 0.0, 616);
    auto noisy = run_rounds(sut, 2000, 0.15, 717);
    double noisy_frac = noisy.success_fraction();

    ok = clean.accepts == 500 && noisy_frac >= 0.99;
    std::ostringstream detail;
    detail << "ber0 " << clean.accepts << "/500, ber0.15 " << noisy.accepts << "/2000 ("
           << noisy_frac * 100.0 << "%, need >= 99%)";
    return detail.str();
}

std::string criterion5_attacks(bool& ok) {
    auto sut = default_system(9999);

    AttackReport mitm = attack_mitm(sut, 1128, 818);
    AttackReport brute = attack_bruteforce(sut, 10000, 919);
    AttackReport replay = attack_replay(sut, 1020);

    bool mitm_ok = mitm.accepts_by_server == 0 && mitm.puf_invocations_on_device == 0 &&
                   mitm.control_accepts == 1;
    bool brute_ok = brute.accepts_by_server == 0 && brute.puf_invocations_on_device == 0 &&
                    brute.lockout_triggered &&
                    brute.first_lockout_after_failures == sut.config.omega;
    bool replay_ok = replay.accepts_by_server == 0 && replay.control_accepts == 1;

    ok = mitm_ok && brute_ok && replay_ok;
    std::ostringstream detail;
    detail << "mitm(accepts=" << mitm.accepts_by_server << ",puf=" << mitm.puf_invocations_on_device
           << ") brute(accepts=" << brute.accepts_by_server
           << ",puf=" << brute.puf_invocations_on_device
           << ",lock@" << brute.first_lockout_after_failures
           << ") replay(accepts=" << replay.accepts_by_server << ")";
    return detail.str();
}

std::string criterion6_enrollment_scale(bool& ok) {
    auto sut = default_system(9999);
    KeyTriple keys = derive_keys(sut.master_secret);

    bool row_count_ok = sut.db.row_count(kDeviceId) == 5000;

    auto dir = std::filesystem::temp_directory_path() / "pufrla_acceptance";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "scale.db").string();
    sut.db.save(path);
    Database loaded = Database::load(path);

    // Every row retrievable by its index token after the save/load cycle.
    std::size_t missing = 0;
    for (const auto& [key, row] : sut.db.rows(kDeviceId)) {
        auto got = loaded.get(kDeviceId, key);
        if (!got || !(*got == row)) ++missing;
    }

    // No enrolled plaintext value may appear in the file bytes. Gather the
    // needles by re-deriving the enrollment-time values.
    std::ifstream in(path, std::ios::binary);
    std::vector<std::uint8_t> file_bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
    std::vector<std::vector<std::uint8_t>> needles;
    {
        RnStream stream(sut.config.seed, sut.config.m);
        std::uint64_t c1 = sut.config.counter1_init;
        std::uint64_t c2 = sut.config.counter2_init;
        Prng64 unused(0);
        for (std::uint64_t i = 0; i <= sut.config.m; ++i) {
            BitString rn = stream.next_rn();
            if (i % 2 == 0) {
                needles.push_back(shuffle(rn, c2).to_bytes());  // N_is pre-PRF
            } else {
                std::uint64_t counter_be = c2;
                std::vector<std::uint8_t> c2_bytes(8);
                for (int b = 7; b >= 0; --b) {
                    c2_bytes[static_cast<std::size_t>(7 - b)] =
                        static_cast<std::uint8_t>(counter_be >> (8 * b));
                }
                needles.push_back(c2_bytes);
                needles.push_back(shuffle(rn, c1).to_bytes());  // S
                BitString response = sut.puf.eval_response(rn, false, unused);
                needles.push_back(shuffle(response, c2).to_bytes());  // Rs
                c1 += sut.config.const1;
                c2 += sut.config.const2;
            }
        }
        // Help masks: recover them from the sealed payloads we wrote.
        for (const auto& [key, row] : sut.db.rows(kDeviceId)) {
            auto plain = open_sealed(keys.k_enc, keys.k_mac, row.sealed_payload);
            if (!plain) continue;
            needles.push_back(RecordPlain::parse(*plain).help.to_bytes());
        }
    }

    // Single pass: hash the first 8 bytes of every needle, probe each file
    // offset, verify the full needle only on a prefix hit.
    auto prefix64 = [](const std::uint8_t* p) {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = v << 8 | p[i];
        return v;
    };
    std::unordered_multimap<std::uint64_t, const std::vector<std::uint8_t>*> by_prefix;
    for (const auto& n : needles) by_prefix.emplace(prefix64(n.data()), &n);
    std::size_t plaintext_hits = 0;
    for (std::size_t off = 0; off + 8 <= file_bytes.size(); ++off) {
        auto range = by_prefix.equal_range(prefix64(&file_bytes[off]));
        for (auto it = range.first; it != range.second; ++it) {
            const auto& n = *it->second;
            if (off + n.size() <= file_bytes.size() &&
                std::equal(n.begin(), n.end(), file_bytes.begin() + static_cast<long>(off)))
                ++plaintext_hits;
        }
    }

    std::filesystem::remove(path);
    ok = row_count_ok && missing == 0 && plaintext_hits == 0;
    std::ostringstream detail;
    detail << "rows=" << sut.db.row_count(kDeviceId) << ", unreadable=" << missing
           << ", plaintext_hits=" << plaintext_hits << " (needles=" << needles.size() << ")";
    return detail.str();
}

std::string criterion7_population(bool& ok) {
    MetricsReport report = compute_metrics(10, 500, 4, 0.0, 31000, default_seed());

    PufConfig cfg;
    cfg.device_seed = 31000;
    PufInstance inst(cfg);
    auto challenges = odd_challenges(default_seed(), 100);
    Prng64 rng(808);
    double rel0 = metric_reliability(inst, challenges, 10, 0.0, rng);
    double rel125 = metric_reliability(inst, challenges, 10, 0.125, rng);
    double rel15 = metric_reliability(inst, challenges, 10, 0.15, rng);

    bool uniq_ok = std::abs(report.uniqueness_pct - 50.0) <= 5.0;
    bool rand_ok = std::abs(report.randomness_pct - 50.0) <= 5.0;
    bool rel_ok = std::abs(rel0 - 100.0) <= 1.0 && std::abs(rel125 - 87.5) <= 1.0 &&
                  std::abs(rel15 - 85.0) <= 1.0;
    ok = uniq_ok && rand_ok && rel_ok;
    std::ostringstream detail;
    detail << "uniqueness=" << report.uniqueness_pct << "%, randomness=" << report.randomness_pct
           << "%, reliability(0/0.125/0.15)=" << rel0 << "/" << rel125 << "/" << rel15;
    return detail.str();
}

std::string criterion8_wraparound(bool& ok) {
    auto sut = default_system(9);  // 5 pairs

    auto straight = run_rounds(sut, 8, 0.0, 111);
    bool all_eight = straight.accepts == 8;

    // Interleave voided rounds (flipped challenge bit) with honest rounds.
    Device device(sut.config, sut.puf, sut.initial_state, Prng64(222), Prng64(223));
    Prng64 server_nonce(224);
    std::size_t honest_ok = 0, honest_total = 0;
    for (int round = 0; round < 14; ++round) {
        ServerSession session(sut.db, sut.master_secret, sut.code, server_nonce);
        bool sabotage = round % 2 == 0;
        FrameHook hook;
        if (sabotage) {
            hook = [](const std::vector<std::uint8_t>& frame)
                -> std::optional<std::vector<std::uint8_t>> {
                if (frame.size() >= 5 && frame[4] == 0x04) {
                    auto copy = frame;
                    copy[5] ^= 0x01;
                    return copy;
                }
                return frame;
            };
        }
        RoundOutcome outcome =
            run_round(device, session, static_cast<std::uint64_t>(round), hook, {});
        if (!sabotage) {
            ++honest_total;
            if (outcome.server_accept) ++honest_ok;
        }
    }

    ok = all_eight && honest_ok == honest_total;
    std::ostringstream detail;
    detail << "straight=" << straight.accepts << "/8, interleaved honest=" << honest_ok << "/"
           << honest_total;
    return detail.str();
}

std::string run_cli(const std::string& cli, const std::string& args, int& exit_code) {
    std::string cmd = cli + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    std::string output;
    char buf[512];
    while (std::fgets(buf, sizeof buf, pipe)) output += buf;
    exit_code = pclose(pipe);
    return output;
}

std::string criterion9_determinism(bool& ok, const std::string& cli) {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "pufrla_acceptance_c9";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const std::string common =
        "--m 199 --device-id 7 --device-seed 00000000acce5501 "
        "--master-secret 202122232425262728292a2b2c2d2e2f "
        "--seed " + std::string(kDefaultSeedHex);

    auto run_process = [&](int idx) {
        std::string db = (dir / ("p" + std::to_string(idx) + ".db")).string();
        std::string st = (dir / ("p" + std::to_string(idx) + ".state")).string();
        std::string tr = (dir / ("p" + std::to_string(idx) + ".transcript")).string();
        int code = 0;
        run_cli(cli, "enroll " + common + " --db " + db + " --device-state " + st, code);
        if (code != 0) throw std::runtime_error("enroll exited nonzero");
        run_cli(cli, "auth " + common + " --db " + db + " --device-state " + st +
                         " --rounds 25 --ber 0 --nonce-seed 777 --transcript " + tr,
                code);
        if (code != 0) throw std::runtime_error("auth exited nonzero");
        return std::pair{db, tr};
    };
    auto [db1, tr1] = run_process(1);
    auto [db2, tr2] = run_process(2);

    // Pre-seal enrollment records must agree byte for byte.
    KeyTriple keys = derive_keys(test_secret());
    Database a = Database::load(db1);
    Database b = Database::load(db2);
    std::size_t mismatches = 0;
    if (a.row_count(7) != b.row_count(7)) ++mismatches;
    for (const auto& [key, row] : a.rows(7)) {
        auto other = b.get(7, key);
        if (!other) {
            ++mismatches;
            continue;
        }
        auto p1 = open_sealed(keys.k_enc, keys.k_mac, row.sealed_payload);
        auto p2 = open_sealed(keys.k_enc, keys.k_mac, other->sealed_payload);
        if (!p1 || !p2 || *p1 != *p2) ++mismatches;
    }

    // Round transcripts must be identical.
    auto read_file = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    std::string t1 = read_file(tr1);
    std::string t2 = read_file(tr2);
    bool transcripts_equal = !t1.empty() && t1 == t2;

    fs::remove_all(dir);
    ok = mismatches == 0 && transcripts_equal;
    std::ostringstream detail;
    detail << "record_mismatches=" << mismatches
           << ", transcripts=" << (transcripts_equal ? "identical" : "DIFFER");
    return detail.str();
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli = argc > 1 ? argv[1] : "./pufrla";

    run_criterion(1, "fig4-golden-vector", [](bool& ok) { return criterion1_fig4(ok); });
    run_criterion(2, "shuffle-bijectivity", [](bool& ok) { return criterion2_bijectivity(ok); });
    run_criterion(3, "bch-127-15-27", [](bool& ok) { return criterion3_bch(ok); });
    run_criterion(4, "reliability-99pct", [](bool& ok) { return criterion4_reliability(ok); });
    run_criterion(5, "attack-suite", [](bool& ok) { return criterion5_attacks(ok); });
    run_criterion(6, "enrollment-scale", [](bool& ok) { return criterion6_enrollment_scale(ok); });
    run_criterion(7, "puf-population", [](bool& ok) { return criterion7_population(ok); });
    run_criterion(8, "wraparound-liveness", [](bool& ok) { return criterion8_wraparound(ok); });
    run_criterion(9, "process-determinism",
                  [&cli](bool& ok) { return criterion9_determinism(ok, cli); });

    int failed = 0;
    for (const auto& c : g_results)
        if (!c.passed) ++failed;
    std::printf("RESULT=%s (%zu/%zu criteria passed)\n", failed == 0 ? "PASS" : "FAIL",
                g_results.size() - static_cast<std::size_t>(failed), g_results.size());
    return failed == 0 ? 0 : 1;
}
