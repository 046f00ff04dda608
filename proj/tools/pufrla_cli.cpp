// pufrla: enrollment, authentication sweeps, a TCP server/device pair,
// attack scenarios, PUF population metrics, and database inspection.
// Reports are line-oriented key=value text ending in RESULT=PASS|FAIL.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "pufrla/harness.hpp"
#include "pufrla/net.hpp"
#include "pufrla/protocol.hpp"

using namespace pufrla;

namespace {

struct CommonOpts {
    std::string seed_hex{kDefaultSeedHex};
    std::uint64_t m = 9999;
    std::uint64_t device_id = 1;
    std::string device_seed_hex = "0000000000000001";
    std::string master_secret_hex = "00000000000000000000000000000000";
    std::string admin_token_hex;
    std::uint64_t omega = 10;
    std::uint64_t tau_ms = 2000;
    std::string config_file;
};

std::uint64_t parse_hex_u64(const std::string& hex) {
    if (hex.size() != 16) throw CLI::ValidationError("expected 16 hex characters");
    return std::stoull(hex, nullptr, 16);
}

// Optional key=value config file; explicit flags win.
void load_config_file(CommonOpts& opts) {
    if (opts.config_file.empty()) return;
    std::ifstream in(opts.config_file);
    if (!in) throw CLI::ValidationError("cannot open config file " + opts.config_file);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key == "seed") opts.seed_hex = value;
        else if (key == "m") opts.m = std::stoull(value);
        else if (key == "device_id") opts.device_id = std::stoull(value);
        else if (key == "device_seed") opts.device_seed_hex = value;
        else if (key == "master_secret") opts.master_secret_hex = value;
        else if (key == "admin_token") opts.admin_token_hex = value;
        else if (key == "omega") opts.omega = std::stoull(value);
        else if (key == "tau_ms") opts.tau_ms = std::stoull(value);
    }
}

ProtocolConfig build_config(const CommonOpts& opts) {
    ProtocolConfig config = ProtocolConfig::defaults();
    config.seed = BitString::from_hex(opts.seed_hex, 128);
    config.m = opts.m;
    config.omega = static_cast<std::uint32_t>(opts.omega);
    config.tau_ms = opts.tau_ms;
    if (!opts.admin_token_hex.empty())
        config.admin_token = BitString::from_hex(opts.admin_token_hex, 128);
    config.validate();
    return config;
}

PufConfig build_puf_config(const CommonOpts& opts) {
    PufConfig cfg;
    cfg.device_seed = parse_hex_u64(opts.device_seed_hex);
    return cfg;
}

MasterSecret build_secret(const CommonOpts& opts) {
    return MasterSecret::from_hex(opts.master_secret_hex);
}

void add_common_flags(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_file, "key=value config file");
    cmd->add_option("--seed", opts.seed_hex, "128-bit SEED (32 hex chars)");
    cmd->add_option("--m", opts.m, "last RN ordinal (odd)");
    cmd->add_option("--device-id", opts.device_id, "device identifier");
    cmd->add_option("--device-seed", opts.device_seed_hex, "device secret (16 hex chars)");
    cmd->add_option("--master-secret", opts.master_secret_hex,
                    "server master secret (32 hex chars)");
    cmd->add_option("--admin-token", opts.admin_token_hex, "unlock token (32 hex chars)");
    cmd->add_option("--omega", opts.omega, "consecutive-failure lockout threshold");
    cmd->add_option("--tau-ms", opts.tau_ms, "response deadline in ms");
}

std::uint64_t random_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void emit(const std::string& body, bool pass) {
    std::cout << body << "RESULT=" << (pass ? "PASS" : "FAIL") << "\n";
}

void write_transcript(const std::string& path,
                      const std::vector<std::vector<std::uint8_t>>& frames) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open transcript file " + path);
    static const char* digits = "0123456789abcdef";
    for (const auto& frame : frames) {
        std::string line;
        line.reserve(frame.size() * 2);
        for (std::uint8_t b : frame) {
            line.push_back(digits[b >> 4]);
            line.push_back(digits[b & 0xf]);
        }
        out << line << '\n';
    }
}

int cmd_enroll(const CommonOpts& opts, const std::string& db_path,
               const std::string& state_path, std::uint64_t seal_seed, bool seal_seed_set) {
    ProtocolConfig config = build_config(opts);
    PufInstance puf(build_puf_config(opts));
    BchCode code = BchCode::build();
    Database db;
    if (std::ifstream(db_path).good()) db = Database::load(db_path);  // re-enroll / add device
    Prng64 seal_rng(seal_seed_set ? seal_seed : random_seed());

    DeviceState state =
        enroll(config, puf, build_secret(opts), opts.device_id, code, db, seal_rng);
    db.save(db_path);
    state.save(state_path);

    std::ostringstream out;
    out << "device_id=" << opts.device_id << '\n';
    out << "rows=" << db.row_count(opts.device_id) << '\n';
    out << "db=" << db_path << '\n';
    out << "device_state=" << state_path << '\n';
    emit(out.str(), true);
    return 0;
}

int cmd_auth(const CommonOpts& opts, const std::string& db_path, const std::string& state_path,
             std::uint64_t rounds, double ber, std::uint64_t nonce_seed, bool nonce_seed_set,
             const std::string& transcript_path) {
    ProtocolConfig config = build_config(opts);
    SystemUnderTest sut{config,
                        build_puf_config(opts),
                        build_secret(opts),
                        opts.device_id,
                        BchCode::build(),
                        Database::load(db_path),
                        PufInstance(build_puf_config(opts)),
                        DeviceState::load(state_path)};

    std::vector<std::vector<std::uint8_t>> transcript;
    auto result = run_rounds(sut, rounds, ber,
                             nonce_seed_set ? nonce_seed : random_seed(),
                             transcript_path.empty() ? nullptr : &transcript);
    if (!transcript_path.empty()) write_transcript(transcript_path, transcript);

    bool pass = result.accepts == result.rounds;
    std::ostringstream out;
    out << "rounds=" << result.rounds << '\n';
    out << "accepts=" << result.accepts << '\n';
    out << "success_fraction=" << result.success_fraction() << '\n';
    out << "ber=" << ber << '\n';
    emit(out.str(), pass);
    return pass ? 0 : 1;
}

int cmd_attack(const CommonOpts& opts, const std::string& mode, std::uint64_t trials,
               std::uint64_t seed, bool seed_set) {
    ProtocolConfig config = build_config(opts);
    SystemUnderTest sut = make_system(config, build_puf_config(opts), build_secret(opts),
                                      opts.device_id, seed_set ? seed : random_seed());
    std::uint64_t scenario_seed = seed_set ? seed : random_seed();

    AttackReport report;
    if (mode == "mitm")
        report = attack_mitm(sut, trials, scenario_seed);
    else if (mode == "bruteforce")
        report = attack_bruteforce(sut, trials, scenario_seed);
    else if (mode == "replay")
        report = attack_replay(sut, scenario_seed);
    else
        throw CLI::ValidationError("unknown attack mode " + mode);

    bool pass = report.passed();
    emit(report.to_report(), pass);
    return pass ? 0 : 1;
}

int cmd_metrics(std::size_t instances, std::size_t crps, std::size_t samples, double ber,
                std::uint64_t device_seed_base, const std::string& seed_hex) {
    MetricsReport report = compute_metrics(instances, crps, samples, ber, device_seed_base,
                                           BitString::from_hex(seed_hex, 128));
    bool pass = std::abs(report.uniqueness_pct - 50.0) <= 5.0 &&
                std::abs(report.randomness_pct - 50.0) <= 5.0 &&
                std::abs(report.reliability_pct - 100.0 * (1.0 - ber)) <= 1.0;
    emit(report.to_report(), pass);
    return pass ? 0 : 1;
}

int cmd_db_dump(const std::string& db_path) {
    Database db = Database::load(db_path);
    std::ostringstream out;
    static const char* digits = "0123456789abcdef";
    auto hex = [](const auto& bytes) {
        std::string s;
        for (std::uint8_t b : bytes) {
            s.push_back(digits[b >> 4]);
            s.push_back(digits[b & 0xf]);
        }
        return s;
    };
    out << "devices=" << db.device_ids().size() << '\n';
    for (std::uint64_t id : db.device_ids()) {
        out << "device=" << id << '\n';
        out << "rows=" << db.row_count(id) << '\n';
        for (const auto& [key, row] : db.rows(id))
            out << "row " << hex(key) << ' ' << hex(row.sealed_payload) << '\n';
    }
    emit(out.str(), true);
    return 0;
}

int cmd_serve(const CommonOpts& opts, const std::string& db_path, const std::string& listen,
              std::uint64_t rounds_per_conn, std::uint64_t max_conns) {
    auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--listen expects host:port");
    std::uint16_t port = static_cast<std::uint16_t>(std::stoul(listen.substr(colon + 1)));

    Database db = Database::load(db_path);
    MasterSecret ms = build_secret(opts);
    BchCode code = BchCode::build();
    Prng64 nonce_rng(random_seed());

    TcpListener listener(port);
    std::cerr << "listening on 127.0.0.1:" << listener.port() << "\n";
    ServeStats total;
    for (std::uint64_t c = 0; max_conns == 0 || c < max_conns; ++c) {
        FrameSocket conn = listener.accept_one();
        conn.set_read_timeout_ms(opts.tau_ms * 10);
        ServeStats stats = serve_connection(conn, db, ms, code, nonce_rng, rounds_per_conn);
        total.sessions += stats.sessions;
        total.rounds += stats.rounds;
        total.accepts += stats.accepts;
        std::cerr << "connection done: rounds=" << stats.rounds << " accepts=" << stats.accepts
                  << "\n";
    }
    std::ostringstream out;
    out << "sessions=" << total.sessions << '\n';
    out << "rounds=" << total.rounds << '\n';
    out << "accepts=" << total.accepts << '\n';
    emit(out.str(), total.rounds == total.accepts);
    return 0;
}

int cmd_device(const CommonOpts& opts, const std::string& state_path, const std::string& connect,
               std::uint64_t rounds, double ber, std::uint64_t nonce_seed, bool nonce_seed_set) {
    auto colon = connect.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--connect expects host:port");
    std::string host = connect.substr(0, colon);
    std::uint16_t port = static_cast<std::uint16_t>(std::stoul(connect.substr(colon + 1)));

    ProtocolConfig config = build_config(opts);
    PufConfig puf_config = build_puf_config(opts);
    PufInstance reference(puf_config);
    puf_config.sigma_noise = ber > 0.0 ? calibrate_sigma(reference, ber) : 0.0;
    PufInstance puf(puf_config);
    DeviceState state = DeviceState::load(state_path);
    std::uint64_t seed = nonce_seed_set ? nonce_seed : random_seed();
    Device device(config, puf, state, Prng64(seed), Prng64(seed ^ 0x6e6f697365726e67ull));

    FrameSocket sock = tcp_connect(host, port);
    DeviceRunStats stats = run_device_connection(sock, device, rounds);
    stats.final_state.save(state_path);

    std::ostringstream out;
    out << "rounds=" << stats.rounds << '\n';
    out << "accepts=" << stats.accepts << '\n';
    out << "locked=" << (stats.final_state.locked ? "true" : "false") << '\n';
    emit(out.str(), stats.rounds == stats.accepts && stats.rounds == rounds);
    return stats.rounds == stats.accepts ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PUF-RLA mutual-authentication simulator"};
    app.require_subcommand(1);

    CommonOpts opts;

    // enroll
    auto* enroll_cmd = app.add_subcommand("enroll", "run the enrollment phase");
    std::string db_path = "pufrla.db";
    std::string state_path = "device.state";
    std::uint64_t seal_seed = 0;
    add_common_flags(enroll_cmd, opts);
    enroll_cmd->add_option("--db", db_path, "database file");
    enroll_cmd->add_option("--device-state", state_path, "device state file");
    auto* seal_opt = enroll_cmd->add_option("--seal-seed", seal_seed,
                                            "deterministic seal-nonce seed (testing)");

    // auth
    auto* auth_cmd = app.add_subcommand("auth", "run in-process authentication rounds");
    std::uint64_t rounds = 100;
    double ber = 0.0;
    std::uint64_t nonce_seed = 0;
    std::string transcript_path;
    add_common_flags(auth_cmd, opts);
    auth_cmd->add_option("--db", db_path, "database file");
    auth_cmd->add_option("--device-state", state_path, "device state file");
    auth_cmd->add_option("--rounds", rounds, "number of rounds");
    auth_cmd->add_option("--ber", ber, "bit error rate to calibrate the PUF noise to");
    auto* nonce_opt = auth_cmd->add_option("--nonce-seed", nonce_seed,
                                           "deterministic nonce seed (testing)");
    auth_cmd->add_option("--transcript", transcript_path, "write hex frames to this file");

    // attack
    auto* attack_cmd = app.add_subcommand("attack", "run an adversary scenario");
    std::string mode = "mitm";
    std::uint64_t trials = 1000;
    std::uint64_t attack_seed = 0;
    add_common_flags(attack_cmd, opts);
    attack_cmd->add_option("--mode", mode, "mitm|bruteforce|replay")->required();
    attack_cmd->add_option("--trials", trials, "number of adversarial trials");
    auto* attack_seed_opt =
        attack_cmd->add_option("--scenario-seed", attack_seed, "deterministic scenario seed");

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "PUF population metrics");
    std::size_t instances = 10;
    std::size_t crps = 500;
    std::size_t samples = 10;
    double metrics_ber = 0.15;
    std::uint64_t metrics_device_base = 1000;
    std::string metrics_seed_hex{kDefaultSeedHex};
    metrics_cmd->add_option("--instances", instances, "population size r");
    metrics_cmd->add_option("--crps", crps, "challenges per instance v");
    metrics_cmd->add_option("--samples", samples, "noisy samples per challenge l");
    metrics_cmd->add_option("--ber", metrics_ber, "injected bit error rate");
    metrics_cmd->add_option("--device-seed-base", metrics_device_base,
                            "first device seed of the population");
    metrics_cmd->add_option("--seed", metrics_seed_hex, "challenge stream seed (32 hex chars)");

    // db-dump
    auto* dump_cmd = app.add_subcommand("db-dump", "print sealed database rows");
    dump_cmd->add_option("--db", db_path, "database file")->required();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "serve authentication over TCP");
    std::string listen = "127.0.0.1:0";
    std::uint64_t rounds_per_conn = 1;
    std::uint64_t max_conns = 1;
    add_common_flags(serve_cmd, opts);
    serve_cmd->add_option("--db", db_path, "database file")->required();
    serve_cmd->add_option("--listen", listen, "host:port (port 0 picks one)");
    serve_cmd->add_option("--rounds-per-conn", rounds_per_conn, "rounds per connection");
    serve_cmd->add_option("--max-conns", max_conns, "connections to serve, 0 = forever");

    // device
    auto* device_cmd = app.add_subcommand("device", "run the device against a TCP server");
    std::string connect = "127.0.0.1:7001";
    add_common_flags(device_cmd, opts);
    device_cmd->add_option("--state", state_path, "device state file")->required();
    device_cmd->add_option("--connect", connect, "server host:port");
    device_cmd->add_option("--rounds", rounds, "rounds to run");
    device_cmd->add_option("--ber", ber, "bit error rate to calibrate the PUF noise to");
    auto* device_nonce_opt =
        device_cmd->add_option("--nonce-seed", nonce_seed, "deterministic nonce seed");

    CLI11_PARSE(app, argc, argv);

    try {
        load_config_file(opts);
        if (enroll_cmd->parsed())
            return cmd_enroll(opts, db_path, state_path, seal_seed, seal_opt->count() > 0);
        if (auth_cmd->parsed())
            return cmd_auth(opts, db_path, state_path, rounds, ber, nonce_seed,
                            nonce_opt->count() > 0, transcript_path);
        if (attack_cmd->parsed())
            return cmd_attack(opts, mode, trials, attack_seed, attack_seed_opt->count() > 0);
        if (metrics_cmd->parsed())
            return cmd_metrics(instances, crps, samples, metrics_ber, metrics_device_base,
                               metrics_seed_hex);
        if (dump_cmd->parsed()) return cmd_db_dump(db_path);
        if (serve_cmd->parsed())
            return cmd_serve(opts, db_path, listen, rounds_per_conn, max_conns);
        if (device_cmd->parsed())
            return cmd_device(opts, state_path, connect, rounds, ber, nonce_seed,
                              device_nonce_opt->count() > 0);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
