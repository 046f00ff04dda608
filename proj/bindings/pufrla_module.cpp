#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pufrla/harness.hpp"
#include "pufrla/protocol.hpp"
#include "pufrla/shuffler.hpp"

namespace py = pybind11;
using namespace pufrla;

namespace {

BitString bits_from_hex(const std::string& hex, std::size_t len) {
    return BitString::from_hex(hex, len);
}

}  // namespace

PYBIND11_MODULE(_pufrla, m) {
    m.doc() = "PUF-RLA authentication protocol core";

    py::class_<BitString>(m, "BitString")
        .def_static("zeros", &BitString::zeros)
        .def_static("ones", &BitString::ones)
        .def_static("from_hex", &bits_from_hex, py::arg("hex"), py::arg("len"))
        .def("__len__", &BitString::size)
        .def("bit", &BitString::bit)
        .def("set_bit", &BitString::set_bit)
        .def("popcount", &BitString::popcount)
        .def("to_hex", &BitString::to_hex)
        .def("__xor__", &BitString::operator^)
        .def("__eq__", [](const BitString& a, const BitString& b) { return a == b; })
        .def("__repr__",
             [](const BitString& b) {
                 return "BitString(len=" + std::to_string(b.size()) + ", hex=" + b.to_hex() + ")";
             });

    m.def("hamming_distance", &hamming_distance);
    m.def("balance_check", &balance_check);
    m.def("splitmix_next", [](std::uint64_t state) {
        auto r = splitmix_next(state);
        return py::make_tuple(r.state, r.output);
    });
    m.def("default_seed_hex", [] { return std::string(kDefaultSeedHex); });

    m.def("shuffle", &shuffle, py::arg("x"), py::arg("key"));
    m.def("deshuffle", &deshuffle, py::arg("s"), py::arg("key"));
    m.def(
        "shuffle_tuples",
        [](const std::vector<std::string>& tuples, const std::vector<std::size_t>& j_values) {
            auto seq = SwapSequence::from_j_values(j_values, tuples.size());
            return shuffle_with_sequence(tuples, seq);
        },
        py::arg("tuples"), py::arg("j_values"));
    m.def(
        "deshuffle_tuples",
        [](const std::vector<std::string>& tuples, const std::vector<std::size_t>& j_values) {
            auto seq = SwapSequence::from_j_values(j_values, tuples.size());
            return deshuffle_with_sequence(tuples, seq);
        },
        py::arg("tuples"), py::arg("j_values"));

    py::class_<BchCode>(m, "BchCode")
        .def_static("build", &BchCode::build)
        .def_property_readonly("n", &BchCode::n)
        .def_property_readonly("k", &BchCode::k)
        .def_property_readonly("t", &BchCode::t)
        .def("encode", &BchCode::encode)
        .def("decode", [](const BchCode& code, const BitString& word) {
            return code.decode(word);  // None on failure
        });

    m.def(
        "helper_gen",
        [](const BchCode& code, const BitString& response, std::uint64_t rng_seed) {
            Prng64 rng(rng_seed);
            return helper_gen(code, response, rng).mask;
        },
        py::arg("code"), py::arg("response"), py::arg("rng_seed"));
    m.def(
        "recover",
        [](const BchCode& code, const BitString& mask, const BitString& noisy) {
            return recover(code, HelperData{mask}, noisy);
        },
        py::arg("code"), py::arg("mask"), py::arg("noisy"));

    py::class_<PufConfig>(m, "PufConfig")
        .def(py::init<>())
        .def_readwrite("stages", &PufConfig::stages)
        .def_readwrite("chains", &PufConfig::chains)
        .def_readwrite("response_len", &PufConfig::response_len)
        .def_readwrite("sigma_noise", &PufConfig::sigma_noise)
        .def_readwrite("device_seed", &PufConfig::device_seed);

    py::class_<PufInstance>(m, "PufInstance")
        .def(py::init<PufConfig>())
        .def("eval_response",
             [](const PufInstance& inst, const BitString& seed_rn, bool noisy,
                std::uint64_t noise_seed) {
                 Prng64 rng(noise_seed);
                 return inst.eval_response(seed_rn, noisy, rng);
             },
             py::arg("seed_rn"), py::arg("noisy") = false, py::arg("noise_seed") = 0)
        .def_property_readonly("invocation_count", &PufInstance::invocation_count);

    m.def("calibrate_sigma", &calibrate_sigma);

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("rounds", &SweepResult::rounds)
        .def_readonly("accepts", &SweepResult::accepts)
        .def("success_fraction", &SweepResult::success_fraction);

    py::class_<AttackReport>(m, "AttackReport")
        .def_readonly("mode", &AttackReport::mode)
        .def_readonly("trials", &AttackReport::trials)
        .def_readonly("accepts_by_server", &AttackReport::accepts_by_server)
        .def_readonly("puf_invocations_on_device", &AttackReport::puf_invocations_on_device)
        .def_readonly("lockout_triggered", &AttackReport::lockout_triggered)
        .def_readonly("first_lockout_after_failures",
                      &AttackReport::first_lockout_after_failures)
        .def_readonly("control_accepts", &AttackReport::control_accepts)
        .def("to_report", &AttackReport::to_report)
        .def("passed", &AttackReport::passed);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("uniqueness_pct", &MetricsReport::uniqueness_pct)
        .def_readonly("reliability_pct", &MetricsReport::reliability_pct)
        .def_readonly("randomness_pct", &MetricsReport::randomness_pct)
        .def("to_report", &MetricsReport::to_report);

    // A ready-to-use enrolled system: enrollment plus protocol sweeps and
    // attack scenarios, mirroring the CLI surface for scripting.
    py::class_<SystemUnderTest>(m, "System")
        .def(py::init([](const std::string& seed_hex, std::uint64_t m,
                         std::uint64_t device_seed, const std::string& master_secret_hex,
                         std::uint64_t device_id, std::uint64_t seal_seed) {
                 ProtocolConfig config = ProtocolConfig::defaults();
                 config.seed = BitString::from_hex(seed_hex, 128);
                 config.m = m;
                 PufConfig puf_config;
                 puf_config.device_seed = device_seed;
                 return make_system(config, puf_config, MasterSecret::from_hex(master_secret_hex),
                                    device_id, seal_seed);
             }),
             py::arg("seed_hex"), py::arg("m") = 99, py::arg("device_seed") = 1,
             py::arg("master_secret_hex") = std::string(32, '0'), py::arg("device_id") = 1,
             py::arg("seal_seed") = 1)
        .def("enrolled_rows",
             [](const SystemUnderTest& sut) { return sut.db.row_count(sut.device_id); })
        .def(
            "run_rounds",
            [](const SystemUnderTest& sut, std::uint64_t rounds, double ber,
               std::uint64_t nonce_seed) { return run_rounds(sut, rounds, ber, nonce_seed); },
            py::arg("rounds"), py::arg("ber") = 0.0, py::arg("nonce_seed") = 1)
        .def(
            "attack",
            [](const SystemUnderTest& sut, const std::string& mode, std::uint64_t trials,
               std::uint64_t seed) {
                if (mode == "mitm") return attack_mitm(sut, trials, seed);
                if (mode == "bruteforce") return attack_bruteforce(sut, trials, seed);
                if (mode == "replay") return attack_replay(sut, seed);
                throw std::invalid_argument("unknown attack mode: " + mode);
            },
            py::arg("mode"), py::arg("trials") = 200, py::arg("seed") = 1)
        .def("save_db",
             [](const SystemUnderTest& sut, const std::string& path) { sut.db.save(path); });

    m.def("compute_metrics", &compute_metrics, py::arg("instances"), py::arg("challenges"),
          py::arg("samples"), py::arg("ber"), py::arg("base_device_seed"),
          py::arg("challenge_seed"));
    m.def("odd_challenges", &odd_challenges);
}
