#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spdelab/ensemble.hpp"
#include "spdelab/report.hpp"

using namespace spdelab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(bool(is));
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::string data_file(const std::string& name) {
    for (const char* prefix : {"../tests/data/", "tests/data/", "../../tests/data/"})
        if (fs::exists(prefix + name)) return prefix + name;
    throw std::runtime_error("test data file not found: " + name);
}

nlohmann::json tiny_config_json() {
    return nlohmann::json{
        {"grid", {{"dim", 1}, {"points", 64}, {"half_length", 16.0}}},
        {"time", {{"t_final", 0.02}, {"dt", 1e-3}, {"snapshots", 3}}},
        {"coefficients", {{"preset", "identity"}, {"K", 1.0}, {"lambda", 1.0}, {"b_bar", {1.0}}}},
        {"noise",
         {{"regime", "lipschitz"}, {"channels", 4}, {"mu_preset", "modal:0.5"}, {"mu_scale", 0.2}}},
        {"cutoff", {{"growth", 2.0}, {"m_max", 64.0}}},
        {"initial", {{"preset", "gaussian-bump"}, {"amplitude", 1.0}, {"width", 1.0}}},
        {"ensemble", {{"paths", 3}, {"master_seed", 99}}},
        {"output", {{"p_list", {8.0}}, {"psi_k", 12.0}, {"probes", 2}}}};
}

} // namespace

TEST_CASE("config: defaults, unknown keys, malformed files") {
    RunConfig cfg = RunConfig::from_json(tiny_config_json());
    CHECK(cfg.points == 64);
    CHECK(cfg.paths == 3);
    CHECK(cfg.lipschitz());

    nlohmann::json bad = tiny_config_json();
    bad["grid"]["n_points"] = 32; // typo
    CHECK_THROWS_WITH_AS(RunConfig::from_json(bad),
                         doctest::Contains("unknown key 'grid.n_points'"),
                         std::invalid_argument);

    const std::string path = "malformed_config.json";
    {
        std::ofstream os(path);
        os << "{ this is not json";
    }
    CHECK_THROWS_WITH_AS(RunConfig::from_file(path), doctest::Contains("malformed"),
                         std::invalid_argument);
}

TEST_CASE("config: fingerprint is canonical") {
    RunConfig a = RunConfig::from_json(tiny_config_json());
    // same content, different key insertion order
    nlohmann::json reordered;
    reordered["output"] = tiny_config_json()["output"];
    reordered["grid"] = tiny_config_json()["grid"];
    reordered["time"] = tiny_config_json()["time"];
    reordered["noise"] = tiny_config_json()["noise"];
    reordered["cutoff"] = tiny_config_json()["cutoff"];
    reordered["initial"] = tiny_config_json()["initial"];
    reordered["ensemble"] = tiny_config_json()["ensemble"];
    reordered["coefficients"] = tiny_config_json()["coefficients"];
    RunConfig b = RunConfig::from_json(reordered);
    CHECK(a.fingerprint() == b.fingerprint());

    RunConfig c = a;
    c.master_seed += 1;
    CHECK(c.fingerprint() != a.fingerprint());

    RunConfig d = a;
    d.directory = "elsewhere"; // output location must not change the identity
    CHECK(d.fingerprint() == a.fingerprint());
    CHECK(a.fingerprint_hex().size() == 16);
}

TEST_CASE("config validation: regime rules and witnesses") {
    RunConfig ok = RunConfig::from_json(tiny_config_json());
    CHECK(validate_config(ok).ok()); // 8 > d + 2 = 3

    RunConfig low_p = ok;
    low_p.p_list = {3.0};
    ConfigValidation v1 = validate_config(low_p);
    CHECK_FALSE(v1.ok());
    CHECK(v1.issues[0].field == "output.p_list");

    RunConfig sup = ok;
    sup.regime = "superlinear";
    sup.lambda = 0.5;
    sup.lambda0 = 1.5; // violates (0, 1/d)
    sup.kappa = 0.75;
    sup.p_list = {16.0};
    ConfigValidation v2 = validate_config(sup);
    CHECK_FALSE(v2.ok());
    bool found = false;
    for (const auto& i : v2.issues) found = found || i.field == "noise.lambda0";
    CHECK(found);
    sup.lambda0 = 0.5;
    CHECK(validate_config(sup).ok());

    RunConfig neg = ok;
    neg.initial_preset = "custom";
    neg.samples.assign(64, 0.5);
    neg.samples[17] = -0.25;
    ConfigValidation v3 = validate_config(neg);
    CHECK_FALSE(v3.ok());
    bool witness = false;
    for (const auto& i : v3.issues)
        witness = witness || i.message.find("flat index 17") != std::string::npos;
    CHECK(witness);

    RunConfig fast = ok;
    fast.t_final = 1.0;
    fast.dt = 0.1; // budget at m0 = 2 is min(h/8, 1/16) = 0.0625
    ConfigValidation v4 = validate_config(fast);
    CHECK_FALSE(v4.ok());
}

TEST_CASE("build_setup: level default, probes, snapshot schedule") {
    RunConfig cfg = RunConfig::from_json(tiny_config_json());
    cfg.t_final = 0.1;
    cfg.dt = 1e-4; // 1000 steps
    cfg.snapshots = 9;
    PathSetup setup = build_setup(cfg);
    CHECK(setup.cutoff.m0 == doctest::Approx(2.0 * setup.u0.max_abs()));
    CHECK(setup.recording.probe_indices.size() == 2);
    REQUIRE(setup.recording.snapshot_steps.size() == 9);
    CHECK(setup.recording.snapshot_steps.front() == 0);
    CHECK(setup.recording.snapshot_steps.back() == 1000);
    // geometric: each gap roughly doubles
    const auto& s = setup.recording.snapshot_steps;
    for (std::size_t i = 2; i + 1 < s.size(); ++i)
        CHECK(s[i + 1] - s[i] >= (s[i] - s[i - 1]));
}

TEST_CASE("resolve_out_dir: flag, config, environment") {
    RunConfig cfg = RunConfig::from_json(tiny_config_json());
    CHECK(resolve_out_dir(cfg, "flagdir") == "flagdir");
    cfg.directory = "cfgdir";
    CHECK(resolve_out_dir(cfg, "") == "cfgdir");
    cfg.directory.clear();
    setenv("SPDE_LAB_OUT", "/tmp/spde-lab-env", 1);
    CHECK(resolve_out_dir(cfg, "") ==
          std::string("/tmp/spde-lab-env/run-") + cfg.fingerprint_hex());
    unsetenv("SPDE_LAB_OUT");
    CHECK(resolve_out_dir(cfg, "").rfind("out/run-", 0) == 0);
}

TEST_CASE("run_ensemble: reruns are byte-identical and checks are unique") {
    RunConfig cfg = RunConfig::from_json(tiny_config_json());
    EnsembleOptions opts;
    opts.out_dir = "harness_run_a";
    EnsembleResult a = run_ensemble(cfg, opts);
    opts.out_dir = "harness_run_b";
    EnsembleResult b = run_ensemble(cfg, opts);

    CHECK(slurp("harness_run_a/summary.json") == slurp("harness_run_b/summary.json"));
    for (int i = 0; i < 3; ++i) {
        const std::string name = "/path_" + std::to_string(i) + ".bin";
        CHECK(slurp("harness_run_a" + name) == slurp("harness_run_b" + name));
    }
    // overwrite in place: still identical
    EnsembleResult c = run_ensemble(cfg, opts);
    CHECK(slurp("harness_run_b/summary.json") == slurp("harness_run_a/summary.json"));

    // each enabled check appears exactly once
    std::map<std::string, int> seen;
    for (const auto& chk : a.summary.at("checks"))
        seen[chk.at("check").get<std::string>()] += 1;
    for (const auto& [name, count] : seen) CHECK(count == 1);

    // seed override changes the fingerprint and the records
    EnsembleOptions seeded = opts;
    seeded.out_dir = "harness_run_seeded";
    seeded.has_seed_override = true;
    seeded.seed_override = 12345;
    EnsembleResult d = run_ensemble(cfg, seeded);
    CHECK(d.summary.at("fingerprint") != a.summary.at("fingerprint"));

    EnsembleOptions bad = opts;
    bad.checks = {"definitely-not-a-check"};
    CHECK_THROWS(run_ensemble(cfg, bad));
}

TEST_CASE("run_ensemble: worker count does not change the bytes") {
    RunConfig cfg = RunConfig::from_json(tiny_config_json());
    cfg.paths = 4;
    EnsembleOptions serial;
    serial.out_dir = "harness_serial";
    serial.workers = 1;
    EnsembleOptions pooled;
    pooled.out_dir = "harness_pooled";
    pooled.workers = 4;
    run_ensemble(cfg, serial);
    run_ensemble(cfg, pooled);
    CHECK(slurp("harness_serial/summary.json") == slurp("harness_pooled/summary.json"));
    for (int i = 0; i < 4; ++i) {
        const std::string name = "/path_" + std::to_string(i) + ".bin";
        CHECK(slurp("harness_serial" + name) == slurp("harness_pooled" + name));
    }
}

TEST_CASE("load_records: fingerprint mixing is rejected") {
    RunConfig cfg = RunConfig::from_json(tiny_config_json());
    EnsembleOptions opts;
    opts.out_dir = "harness_mix";
    EnsembleResult res = run_ensemble(cfg, opts);

    PathRecord tampered = res.records[0];
    tampered.fingerprint ^= 0xdeadbeef;
    tampered.write_file("harness_mix/path_1.bin");
    CHECK_THROWS_WITH_AS(load_records("harness_mix"), doctest::Contains("mixed"),
                         std::invalid_argument);

    CHECK_THROWS(load_records("no_such_dir_here"));
}

TEST_CASE("report: golden fixture renders byte-identically") {
    nlohmann::json summary = nlohmann::json::parse(slurp(data_file("golden_summary.json")));
    RenderedReport rendered = render_report(summary);
    CHECK(rendered.text == slurp(data_file("golden_report.txt")));
    CHECK_FALSE(rendered.all_pass); // fixture contains one failing check
    CHECK(rendered.csv_files.count("martingale_curve.csv") == 1);
    CHECK(rendered.csv_files.count("structure_time.csv") == 1);

    // the curve CSV carries the fingerprint and the data rows
    const std::string& curve = rendered.csv_files.at("martingale_curve.csv");
    CHECK(curve.find("# fingerprint=0123456789abcdef") != std::string::npos);
    CHECK(curve.find("0.125,2,0.01") != std::string::npos);
}

TEST_CASE("report: unregistered anchors and missing fields fail") {
    nlohmann::json summary = nlohmann::json::parse(slurp(data_file("golden_summary.json")));
    summary["checks"][0]["anchor"] = "Lemma 9.9 not-in-registry";
    CHECK_THROWS_WITH_AS(render_report(summary), doctest::Contains("not registered"),
                         std::invalid_argument);

    nlohmann::json empty;
    CHECK_THROWS_WITH_AS(render_report(empty), doctest::Contains("missing"),
                         std::invalid_argument);
}

TEST_CASE("cli binary: exit codes for bad inputs") {
    if (!fs::exists("spde-lab")) {
        WARN_MESSAGE(false, "spde-lab binary not in working directory; skipping");
        return;
    }
    {
        std::ofstream os("cli_bad.json");
        os << "{ nope";
    }
    CHECK(WEXITSTATUS(std::system("./spde-lab validate --config cli_bad.json "
                                  ">/dev/null 2>&1")) == 2);
    CHECK(WEXITSTATUS(std::system("./spde-lab estimate --records no_such_dir "
                                  ">/dev/null 2>&1")) == 2);
    CHECK(WEXITSTATUS(std::system("./spde-lab report --summary no_such.json "
                                  ">/dev/null 2>&1")) == 2);

    // a good config round-trips through validate and report
    {
        std::ofstream os("cli_good.json");
        os << tiny_config_json().dump(2);
    }
    CHECK(WEXITSTATUS(std::system("./spde-lab validate --config cli_good.json --out "
                                  "cli_validate_out >/dev/null 2>&1")) == 0);
    CHECK(WEXITSTATUS(std::system("./spde-lab ensemble --config cli_good.json --out "
                                  "cli_run_out >/dev/null 2>&1")) == 0);
    CHECK(WEXITSTATUS(std::system("./spde-lab report --summary cli_run_out/summary.json "
                                  "--out cli_report_out >/dev/null 2>&1")) == 0);
    CHECK(fs::exists("cli_report_out/report.txt"));
    CHECK(WEXITSTATUS(std::system("./spde-lab estimate --records cli_run_out --direction "
                                  "space >/dev/null 2>&1")) == 0);
    CHECK(fs::exists("cli_run_out/exponents_space.json"));
}

TEST_CASE("estimation examples: smooth heat snapshot clips near 1") {
    // sigma = 0 heat flow at modest cost: a single path, terminal snapshot
    RunConfig cfg = RunConfig::from_json(tiny_config_json());
    cfg.points = 256;
    cfg.channels = 0;
    cfg.mu_scale = 0.0;
    cfg.b_bar = {0.0};
    cfg.t_final = 0.05;
    cfg.dt = 1e-3;
    cfg.snapshots = 3;
    cfg.paths = 1;
    EnsembleOptions opts;
    opts.out_dir = "harness_heat_estimate";
    EnsembleResult res = run_ensemble(cfg, opts);

    auto series = space_series_for_estimation(res.records);
    REQUIRE(!series.empty());
    auto lags = dyadic_lags(series.front().size(), 32, 8);
    AggregatedExponent agg = aggregate_exponents(series, lags, "space");
    CHECK(agg.aggregate.estimate >= 0.95);

    // empty record directories are rejected
    fs::create_directories("harness_empty");
    {
        std::ofstream os("harness_empty/index.json");
        os << "{\"files\": []}";
    }
    CHECK_THROWS(load_records("harness_empty"));
}
