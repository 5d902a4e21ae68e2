#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spinread/cli.hpp"
#include "spinread/pipeline.hpp"

using namespace spinread;
using namespace spinread::cli;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "spinread_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig make(const std::string& cmd, const std::vector<std::string>& sets, const fs::path& out,
               std::optional<std::uint64_t> seed = std::nullopt) {
    json user = {{"schema_version", kSchemaVersion}};
    for (const auto& s : sets) apply_override(user, s);
    return {cmd, merge_config(cmd, user), seed, out};
}

}  // namespace

TEST_CASE("config schema") {
    CHECK(commands().size() == 9);
    for (const auto& c : commands()) CHECK(default_config(c)["schema_version"] == kSchemaVersion);
    CHECK_THROWS_AS(merge_config("simulate", json::object()), ConfigError);
    CHECK_THROWS_AS(merge_config("simulate", {{"schema_version", 2}}), ConfigError);
    CHECK_THROWS_AS(merge_config("simulate", {{"schema_version", 1}, {"n_trace", 5}}), ConfigError);
    CHECK_THROWS_AS(merge_config("simulate", {{"schema_version", 1}, {"n_traces", "many"}}), ConfigError);
    CHECK_THROWS_AS(merge_config("simulate", {{"schema_version", 1}, {"model", {{"gamma", 1.0}}}}), ConfigError);
    CHECK_THROWS_AS(default_config("launch"), ConfigError);

    const auto m = merge_config("simulate", {{"schema_version", 1}, {"model", {{"gamma_t0_hz", 10.0}}}});
    CHECK(m["model"]["gamma_t0_hz"] == 10.0);
    CHECK(m["model"]["v_triplet"] == 1.0);

    json u = {{"schema_version", 1}};
    apply_override(u, "model.tlf_up_hz=25");
    apply_override(u, "output=run_a");
    apply_override(u, "t_read_s=[1e-5,2e-5]");
    CHECK(u["model"]["tlf_up_hz"] == 25);
    CHECK(u["output"] == "run_a");
    CHECK(u["t_read_s"].size() == 2);
    CHECK_THROWS_AS(apply_override(u, "novalue"), ConfigError);
}

TEST_CASE("simulate, classify and sweep end to end") {
    const auto dir = scratch("e2e");
    CHECK(run(make("simulate", {}, dir)).exit_code == exit_config);

    const auto sim = run(make("simulate", {"n_traces=10000", "n_samples=340"}, dir, 1234));
    REQUIRE(sim.exit_code == exit_ok);
    CHECK(sim.report["toolkit"] == "spinread");
    CHECK(sim.report["seed"] == 1234);
    CHECK(fs::exists(dir / "report.json"));
    const auto& fr = sim.report["results"]["label_fractions"];
    const std::array<double, 3> pi{0.25, 0.25, 0.5};
    const std::array<const char*, 3> names{"S", "T0", "Tm"};
    for (int s = 0; s < 3; ++s)
        CHECK(std::abs(fr[names[s]].get<double>() - pi[s]) < 3.0 * std::sqrt(pi[s] * (1 - pi[s]) / 10000.0));

    const std::string input = "input=" + (dir / "traces").string();
    const auto c1 = run(make("classify", {input, "output=a.csv"}, dir));
    const auto c2 = run(make("classify", {input, "output=b.csv"}, dir));
    REQUIRE(c1.exit_code == exit_ok);
    const auto a = slurp(dir / "a.csv");
    CHECK(a == slurp(dir / "b.csv"));
    CHECK(a.rfind("t_read_s,classifier,basis,F_m,V_m,recall_S,recall_T0,recall_Tm,n,F_balanced\n", 0) == 0);
    CHECK(c1.report["results"]["metrics"]["basis"] == "parity");

    const auto hmm = run(make("sweep", {input, "classifier=hmm", "basis=three_state",
                                        "hmm_file=" + (dir / "hmm.json").string(), "t_read_s=[5e-5,3.4e-4]"},
                              dir));
    REQUIRE(hmm.exit_code == exit_ok);
    CHECK(hmm.report["results"]["metrics"].size() == 2);
    CHECK(run(make("sweep", {input, "classifier=hmm"}, dir)).exit_code == exit_config);
}

TEST_CASE("exit codes") {
    const auto dir = scratch("codes");
    CHECK(run(make("classify", {"input=" + (dir / "nothing").string()}, dir)).exit_code == exit_missing_input);
    CHECK(run(make("fit-physics", {"model=lz", "init=[1,2]", "input=x.csv"}, dir)).exit_code == exit_config);
    CHECK(run(make("emit", {"family=sound"}, dir)).exit_code == exit_config);

    // an observation no reachable state can emit underflows the forward pass
    markov::Trace t;
    t.dt = 1e-6;
    t.samples = {0.0, 1e4, 0.0};
    t.label = markov::SpinState::S;
    pipeline::save_bundle(pipeline::bundle_from_batch({t}), dir / "far");
    const markov::HmmParams p({1, 0, 0, 0, 0, 0}, {}, 1e-6, markov::EmissionModel::charge_tied(0.0, 1.0, 1e-3));
    pipeline::write_file_atomic(dir / "tight.json", markov::to_json(p).dump());
    const auto bad = run(make("classify", {"input=" + (dir / "far").string(), "classifier=hmm",
                                           "basis=three_state", "hmm_file=" + (dir / "tight.json").string(),
                                           "t_read_s=3e-6"},
                              dir));
    CHECK(bad.exit_code == exit_numerical);
    CHECK(bad.report["status"] == "error");
}

TEST_CASE("non-converged EM returns a partial report") {
    const auto dir = scratch("em");
    REQUIRE(run(make("simulate", {"n_traces=300", "n_samples=100", "dt_s=1e-5"}, dir, 5)).exit_code == exit_ok);
    const auto fit = run(make("fit-hmm", {"input=" + (dir / "traces").string(), "max_iter=1", "tol=1e-14",
                                          "model.gamma_t0_hz=2000"},
                              dir));
    CHECK(fit.exit_code == exit_not_converged);
    CHECK(fit.report["status"] == "not_converged");
    CHECK(fit.report["results"]["iterations"] == 1);
    CHECK(fs::exists(dir / "hmm_fit.json"));
}

TEST_CASE("physics fit and emitters") {
    const auto dir = scratch("emit");
    std::string csv = "sweep_rate_ev_s,probability\n";
    for (int i = 1; i <= 30; ++i) {
        const double v = 5.0 * i;
        csv += std::to_string(v) + "," + std::to_string(std::exp(-std::log(2.0) * 30.29244483 / v)) + "\n";
    }
    pipeline::write_file_atomic(dir / "lz.csv", csv);
    const auto fit = run(make("fit-physics", {"model=lz", "init=[30]", "input=" + (dir / "lz.csv").string()}, dir));
    REQUIRE(fit.exit_code == exit_ok);
    CHECK(fit.report["results"]["params"][0].get<double>() == doctest::Approx(46.9).epsilon(1e-4));

    const auto cap = run(make("emit", {"family=capacitance"}, dir));
    REQUIRE(cap.exit_code == exit_ok);
    const auto curve = slurp(dir / "capacitance.csv");
    CHECK(curve.rfind("gamma_hz,delta_c_f\n5e+07,", 0) == 0);
    CHECK(cap.report["results"]["optimal_gamma_hz"].get<double>() == doctest::Approx(1.178e9).epsilon(1e-3));

    REQUIRE(run(make("simulate", {"n_traces=2000", "n_samples=340"}, dir, 9)).exit_code == exit_ok);
    const std::string input = (dir / "traces").string();
    REQUIRE(run(make("emit", {"family=fidelity", "fidelity.input=" + input, "fidelity.hmm_file=" + (dir / "hmm.json").string()}, dir)).exit_code == exit_ok);
    CHECK(slurp(dir / "fidelity.csv").rfind("t_read_s,F_m,V_m,recall_S,recall_T0,recall_Tm\n", 0) == 0);
    REQUIRE(run(make("emit", {"family=histogram", "histogram.input=" + input}, dir)).exit_code == exit_ok);
    CHECK(slurp(dir / "histogram.csv").rfind("bin_center,count,density_two_state,density_three_state\n", 0) == 0);
    REQUIRE(run(make("emit", {"family=noise", "noise.input=" + input}, dir)).exit_code == exit_ok);
    CHECK(slurp(dir / "noise.csv").rfind("t_read_s,inv_snr,inv_snr_fit\n", 0) == 0);
}

TEST_CASE("drift injection and correction through the CLI") {
    const auto dir = scratch("drift");
    REQUIRE(run(make("simulate", {"n_traces=200", "n_samples=50", "drift.background_samples=10",
                                  "drift.drift_per_trace=0.001"},
                     dir, 3))
                .exit_code == exit_ok);
    const auto pre = run(make("preprocess", {"input=" + (dir / "traces").string(), "csv=true"}, dir));
    REQUIRE(pre.exit_code == exit_ok);
    const auto b = pipeline::load_bundle(dir / "corrected");
    CHECK(b.manifest.drift_corrected);
    CHECK(b.manifest.background_samples == 10);
    CHECK(fs::exists(dir / "corrected.csv"));
}

TEST_CASE("SNR from I/Q samples") {
    const auto dir = scratch("snr");
    std::string csv = "i,q\n";
    for (int k = 0; k < 2000; ++k) {
        const double n1 = std::sin(12.9898 * k) * 0.01, n2 = std::cos(78.233 * k) * 0.01;
        csv += std::to_string((k % 2) * 1.0 + n1) + "," + std::to_string(n2) + "\n";
    }
    pipeline::write_file_atomic(dir / "iq.csv", csv);
    const auto r = run(make("snr", {"input=" + (dir / "iq.csv").string()}, dir));
    REQUIRE(r.exit_code == exit_ok);
    CHECK(r.report["results"]["delta_v"].get<double>() == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(r.report["results"]["charge_snr"].get<double>() ==
          doctest::Approx(r.report["results"]["snr"].get<double>() / 0.8));
}
