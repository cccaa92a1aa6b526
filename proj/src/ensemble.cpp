#include "spdelab/ensemble.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "spdelab/norms.hpp"
#include "spdelab/report.hpp"

namespace fs = std::filesystem;

namespace spdelab {

namespace {

nlohmann::json parse_report_string(const std::string& s) { return nlohmann::json::parse(s); }

bool heat_oracle_applicable(const RunConfig& cfg, const PathSetup& setup) {
    if (cfg.channels != 0 && cfg.mu_scale != 0.0) return false;
    if (cfg.initial_preset != "gaussian-bump") return false;
    if (!setup.coeffs.a_spatially_constant()) return false;
    const auto a = setup.coeffs.a_constants();
    for (int i = 0; i < setup.grid().dim; ++i)
        for (int j = 0; j < setup.grid().dim; ++j) {
            const double expect = i == j ? 1.0 : 0.0;
            if (a[std::size_t(i) * setup.grid().dim + j] != expect) return false;
        }
    for (const auto& f : setup.coeffs.b)
        if (f.max_abs() != 0.0) return false;
    if (setup.coeffs.c.max_abs() != 0.0) return false;
    for (const auto& p : setup.coeffs.b_bar)
        for (double v : p.values)
            if (v != 0.0) return false;
    return true;
}

// closed-form heat evolution of the gaussian preset, wrapped on the torus
Field heat_oracle_field(const GridSpec& g, double amp, double width, double t) {
    const double var = width * width + 2.0 * t;
    const double scale = amp * std::pow(width * width / var, 0.5 * g.dim);
    const double L = g.half_length;
    return Field::sample(g, [=](double x, double y) {
        double sx = 0;
        for (int im = -1; im <= 1; ++im) {
            const double xx = x + 2.0 * L * im;
            sx += std::exp(-xx * xx / (2.0 * var));
        }
        if (g.dim == 1) return scale * sx;
        double sy = 0;
        for (int im = -1; im <= 1; ++im) {
            const double yy = y + 2.0 * L * im;
            sy += std::exp(-yy * yy / (2.0 * var));
        }
        return scale * sx * sy;
    });
}

nlohmann::json check_entry(const std::string& check, bool pass, double statistic,
                           double bound, double margin) {
    nlohmann::json j;
    j["check"] = check;
    j["anchor"] = check_anchor_registry().at(check);
    j["pass"] = pass;
    j["statistic"] = statistic;
    j["bound"] = bound;
    j["margin"] = margin;
    j["parameters"] = nlohmann::json::object();
    return j;
}

nlohmann::json failed_entry(const std::string& check, const std::string& error) {
    nlohmann::json j = check_entry(check, false, 0, 0, 0);
    j["error"] = error;
    return j;
}

} // namespace

std::vector<std::string> known_check_names() {
    return {"assumptions", "psi-inequality", "heat-oracle", "positivity",
            "martingale",  "moment",         "exponents",   "embedding"};
}

std::string resolve_out_dir(const RunConfig& cfg, const std::string& flag_dir) {
    if (!flag_dir.empty()) return flag_dir;
    if (!cfg.directory.empty()) return cfg.directory;
    if (const char* env = std::getenv("SPDE_LAB_OUT"); env && *env)
        return std::string(env) + "/run-" + cfg.fingerprint_hex();
    return "out/run-" + cfg.fingerprint_hex();
}

nlohmann::json build_summary(const RunConfig& cfg, const PathSetup& setup,
                             const std::vector<PathRecord>& records,
                             const std::vector<std::string>& enabled) {
    nlohmann::json summary;
    summary["fingerprint"] = cfg.fingerprint_hex();
    summary["code_version"] = kCodeVersion;
    summary["config"] = cfg.canonical();

    nlohmann::json term;
    std::size_t completed = 0, suspected = 0, numerical = 0, budget = 0, pastes = 0;
    for (const auto& r : records) {
        switch (r.termination) {
            case Termination::Completed: ++completed; break;
            case Termination::SuspectedBlowup: ++suspected; break;
            case Termination::NumericalBlowup: ++numerical; break;
            case Termination::StabilityBudget: ++budget; break;
        }
        for (const auto& e : r.events)
            if (e.kind == EventKind::Paste) ++pastes;
    }
    term["paths"] = records.size();
    term["completed"] = completed;
    term["suspected_blowup"] = suspected;
    term["numerical_blowup"] = numerical;
    term["stability_budget"] = budget;
    term["paste_events"] = pastes;
    summary["termination"] = term;

    auto enabled_has = [&](const std::string& name) {
        for (const auto& e : enabled)
            if (e == name) return true;
        return false;
    };

    nlohmann::json checks = nlohmann::json::array();

    if (enabled_has("assumptions")) {
        try {
            ValidationReport rep = validate_assumptions(setup.coeffs);
            bool pass = rep.all_pass() && setup.model.channel_sum_ok();
            nlohmann::json j = check_entry("assumptions", pass, rep.minimal_passing_K, cfg.K,
                                           cfg.K - rep.minimal_passing_K);
            j["details"] = parse_report_string(rep.to_json());
            j["channel_sum"] = setup.model.channel_sum_statistic();
            if (cfg.lipschitz() && cfg.channels > 0) {
                RngStream rng(cfg.master_seed ^ 0x9042);
                ProbeReport probe = lipschitz_probe(setup.model, 256, rng);
                j["lipschitz_probe"] = parse_report_string(probe.to_json());
                pass = pass && probe.pass;
                j["pass"] = pass;
            }
            checks.push_back(j);
        } catch (const std::exception& e) {
            checks.push_back(failed_entry("assumptions", e.what()));
        }
    }

    if (enabled_has("psi-inequality")) {
        try {
            InequalityReport rep =
                verify_psi_inequality(setup.coeffs, cfg.psi_k, setup.cutoff.m0);
            nlohmann::json j = check_entry("psi-inequality", rep.pass, rep.min_margin, 0.0,
                                           rep.min_margin);
            j["parameters"] = {{"k", cfg.psi_k}, {"m", setup.cutoff.m0}};
            j["bracket"] = rep.bracket;
            j["threshold_k"] = rep.threshold_k;
            checks.push_back(j);
        } catch (const std::exception& e) {
            checks.push_back(failed_entry("psi-inequality", e.what()));
        }
    }

    if (enabled_has("heat-oracle")) {
        try {
            if (!heat_oracle_applicable(cfg, setup))
                throw std::invalid_argument(
                    "heat oracle needs sigma = 0, identity a, b = c = bbar = 0, gaussian "
                    "initial data");
            const std::size_t n_steps = setup.step_count();
            const PathRecord& r = records.at(0);
            const Snapshot* terminal = nullptr;
            for (const auto& s : r.snapshots)
                if (s.step == n_steps) terminal = &s;
            if (!terminal)
                throw std::invalid_argument("no terminal snapshot recorded");
            Field got(setup.grid(), terminal->values);
            Field expect =
                heat_oracle_field(setup.grid(), cfg.amplitude, cfg.width, cfg.t_final);
            Field diff(setup.grid());
            for (std::size_t p = 0; p < diff.size(); ++p)
                diff.values[p] = got.values[p] - expect.values[p];
            const double rel = lp_norm(diff, 2.0) / lp_norm(expect, 2.0);
            nlohmann::json j = check_entry("heat-oracle", rel <= 1e-3, rel, 1e-3, 1e-3 - rel);
            checks.push_back(j);
        } catch (const std::exception& e) {
            checks.push_back(failed_entry("heat-oracle", e.what()));
        }
    }

    if (enabled_has("positivity")) {
        double worst = 0; // min over paths of min_u / sup|u0|
        for (const auto& r : records)
            if (r.sup_u0 > 0) worst = std::min(worst, r.min_u / r.sup_u0);
        nlohmann::json j =
            check_entry("positivity", worst >= -1e-6, worst, -1e-6, worst + 1e-6);
        checks.push_back(j);
    }

    if (enabled_has("martingale")) {
        try {
            MartingaleReport rep =
                martingale_check(records, cfg.K, cfg.psi_k, cfg.lambda);
            nlohmann::json j =
                check_entry("martingale", rep.supermartingale_pass,
                            rep.mean_curve.empty() ? 0 : rep.mean_curve.back(),
                            rep.mean_curve.empty() ? 0 : rep.mean_curve.front(),
                            rep.mean_curve.empty()
                                ? 0
                                : rep.mean_curve.front() - rep.mean_curve.back());
            j["parameters"] = {{"K", cfg.K}, {"psi_k", cfg.psi_k}, {"paths", rep.paths_used}};
            j["curve"] = {{"t", rep.times}, {"mean", rep.mean_curve}, {"se", rep.se_curve}};
            j["max_level_seen"] = rep.max_level_seen;
            j["threshold_k_for_level"] = rep.threshold_k_for_level;
            checks.push_back(j);

            nlohmann::json js = check_entry("martingale-sup", rep.sup_bound_pass,
                                            rep.sup_statistic, rep.sup_bound, rep.sup_margin);
            js["parameters"] = {{"K", cfg.K}, {"T", cfg.t_final}};
            checks.push_back(js);
        } catch (const std::exception& e) {
            checks.push_back(failed_entry("martingale", e.what()));
        }
    }

    if (enabled_has("moment")) {
        try {
            const double q = cfg.resolved_moment_q();
            if (!(q > 0)) throw std::invalid_argument("no moment order configured");
            MomentReport rep = lq_moment_check(records, q);
            nlohmann::json j =
                check_entry("moment", rep.pass, rep.statistic, rep.u0_stat, rep.n_hat);
            j["parameters"] = {{"q", q}, {"paths", rep.paths_used}};
            j["n_hat"] = rep.n_hat;
            checks.push_back(j);
        } catch (const std::exception& e) {
            checks.push_back(failed_entry("moment", e.what()));
        }
    }

    const double kappa_eff =
        cfg.lipschitz() ? 0.0 : std::max(cfg.lambda * cfg.dim, cfg.lambda0 * cfg.dim);
    // one-sided regularity targets; the Lipschitz-regime corollary gives
    // exponents arbitrarily close to 1 and 1/2, checked here at eps = 0.1
    const double space_target = cfg.lipschitz() ? 0.9 : 1.0 - kappa_eff;
    const double time_target = cfg.lipschitz() ? 0.4 : 0.5 * (1.0 - kappa_eff);
    const double tolerance = 0.1;

    nlohmann::json time_est_json, space_est_json;
    ExponentEstimate time_est, space_est;
    bool have_time = false, have_space = false;

    if (enabled_has("exponents")) {
        try {
            auto series = time_series_for_estimation(records);
            if (series.empty() || series.front().size() < 96)
                throw std::invalid_argument("probe series too short for lag fitting");
            auto lags = dyadic_lags(series.front().size());
            AggregatedExponent agg = aggregate_exponents(series, lags, "time");
            time_est = agg.aggregate;
            have_time = true;
            nlohmann::json j = check_entry(
                "exponents-time", time_est.estimate >= time_target - tolerance,
                time_est.estimate, time_target, time_est.estimate - (time_target - tolerance));
            j["parameters"] = {{"series", agg.series_used},
                               {"skipped", agg.series_skipped},
                               {"half_width", time_est.half_width},
                               {"r2", time_est.r2}};
            j["table"] = {{"lags", agg.table.lags},
                          {"median_increment", agg.table.median_increment},
                          {"counts", agg.table.counts}};
            checks.push_back(j);
        } catch (const std::exception& e) {
            checks.push_back(failed_entry("exponents-time", e.what()));
        }
        try {
            auto series = space_series_for_estimation(records);
            if (series.empty())
                throw std::invalid_argument("no snapshots available for the space direction");
            auto lags = dyadic_lags(series.front().size(), 32, 8);
            AggregatedExponent agg = aggregate_exponents(series, lags, "space");
            space_est = agg.aggregate;
            have_space = true;
            nlohmann::json j = check_entry(
                "exponents-space", space_est.estimate >= space_target - tolerance,
                space_est.estimate, space_target,
                space_est.estimate - (space_target - tolerance));
            j["parameters"] = {{"series", agg.series_used},
                               {"skipped", agg.series_skipped},
                               {"half_width", space_est.half_width},
                               {"r2", space_est.r2}};
            j["table"] = {{"lags", agg.table.lags},
                          {"median_increment", agg.table.median_increment},
                          {"counts", agg.table.counts}};
            checks.push_back(j);
        } catch (const std::exception& e) {
            checks.push_back(failed_entry("exponents-space", e.what()));
        }
    }

    if (enabled_has("embedding")) {
        if (have_time && have_space) {
            const double p_min = *std::min_element(cfg.p_list.begin(), cfg.p_list.end());
            ConsistencyReport rep = embedding_consistency(time_est, space_est, p_min,
                                                          cfg.resolved_kappa(), cfg.dim);
            nlohmann::json j = check_entry(
                "embedding", rep.pass, std::min(rep.time_margin, rep.space_margin), 0.0,
                std::min(rep.time_margin, rep.space_margin));
            j["parameters"] = {{"p", p_min}, {"kappa", cfg.resolved_kappa()}, {"d", cfg.dim}};
            j["details"] = parse_report_string(rep.to_json());
            checks.push_back(j);
        } else {
            checks.push_back(
                failed_entry("embedding", "needs both exponent estimates in this run"));
        }
    }

    summary["checks"] = checks;
    bool all = true;
    for (const auto& c : checks)
        if (!c.at("pass").get<bool>()) all = false;
    summary["all_pass"] = all;
    return summary;
}

EnsembleResult run_ensemble(RunConfig cfg, const EnsembleOptions& opts) {
    if (opts.has_seed_override) cfg.master_seed = opts.seed_override;

    ConfigValidation validation = validate_config(cfg);
    if (!validation.ok()) {
        std::string msg = "config invalid:";
        for (const auto& i : validation.issues) msg += "\n  " + i.field + ": " + i.message;
        throw std::invalid_argument(msg);
    }

    PathSetup setup = build_setup(cfg);
    const std::size_t n_paths = std::size_t(cfg.paths);
    std::vector<PathRecord> records(n_paths);

    int workers = opts.workers;
    if (workers <= 0) workers = int(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, int(n_paths)));

    if (workers == 1) {
        for (std::size_t i = 0; i < n_paths; ++i)
            records[i] = run_path(setup, std::uint32_t(i));
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n_paths) return;
                    records[i] = run_path(setup, std::uint32_t(i));
                }
            });
        for (auto& t : pool) t.join();
    }

    const std::string out_dir = resolve_out_dir(cfg, opts.out_dir);
    fs::create_directories(out_dir);

    // single-writer discipline: everything lands on disk after the workers
    nlohmann::json manifest;
    manifest["fingerprint"] = cfg.fingerprint_hex();
    manifest["code_version"] = kCodeVersion;
    manifest["paths"] = n_paths;
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t i = 0; i < n_paths; ++i) {
        const std::string name = "path_" + std::to_string(i) + ".bin";
        records[i].write_file(out_dir + "/" + name);
        files.push_back(name);
    }
    manifest["files"] = files;
    {
        std::ofstream os(out_dir + "/index.json", std::ios::trunc);
        os << manifest.dump(2) << "\n";
    }

    std::vector<std::string> enabled = opts.checks;
    if (enabled.empty()) {
        enabled.push_back("assumptions");
        enabled.push_back("psi-inequality");
        enabled.push_back("positivity");
        if (heat_oracle_applicable(cfg, setup)) enabled.push_back("heat-oracle");
        if (n_paths >= 100) enabled.push_back("martingale");
        if (cfg.lipschitz() && cfg.resolved_moment_q() > 0) enabled.push_back("moment");
        const std::size_t steps = setup.step_count() + 1;
        const bool time_ok = cfg.probes > 0 && steps >= 96;
        const bool space_ok = cfg.snapshots > 1 && cfg.points >= 64;
        if (time_ok && space_ok) {
            enabled.push_back("exponents");
            enabled.push_back("embedding");
        }
    } else {
        const auto known = known_check_names();
        for (const auto& name : enabled)
            if (std::find(known.begin(), known.end(), name) == known.end())
                throw std::invalid_argument("unknown check '" + name + "'");
    }

    EnsembleResult result;
    result.summary = build_summary(cfg, setup, records, enabled);
    result.out_dir = out_dir;
    result.all_pass = result.summary.at("all_pass").get<bool>();
    {
        std::ofstream os(out_dir + "/summary.json", std::ios::trunc);
        os << result.summary.dump(2) << "\n";
    }
    result.records = std::move(records);
    return result;
}

std::vector<PathRecord> load_records(const std::string& dir) {
    std::ifstream is(dir + "/index.json");
    if (!is) throw std::invalid_argument("load_records: no index.json in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(is);
    std::vector<PathRecord> records;
    std::uint64_t fp = 0;
    bool first = true;
    for (const auto& f : manifest.at("files")) {
        PathRecord r = PathRecord::read_file(dir + "/" + f.get<std::string>());
        if (first) {
            fp = r.fingerprint;
            first = false;
        } else if (r.fingerprint != fp) {
            throw std::invalid_argument(
                "load_records: mixed fingerprints in one record directory");
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) throw std::invalid_argument("load_records: empty record set");
    return records;
}

} // namespace spdelab
