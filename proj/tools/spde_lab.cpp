// Command-line driver: validate | ensemble | estimate | report.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spdelab/ensemble.hpp"
#include "spdelab/report.hpp"

using namespace spdelab;

namespace {

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

int cmd_validate(const std::string& config_path, const std::string& out_flag) {
    RunConfig cfg;
    try {
        cfg = RunConfig::from_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    nlohmann::json out;
    out["fingerprint"] = cfg.fingerprint_hex();
    bool pass = true;

    ConfigValidation v = validate_config(cfg);
    out["config"] = nlohmann::json::parse(v.to_json());
    pass = pass && v.ok();
    for (const auto& issue : v.issues)
        std::cout << "config issue: " << issue.field << ": " << issue.message << "\n";

    if (v.ok()) {
        PathSetup setup = build_setup(cfg);
        ValidationReport rep = validate_assumptions(setup.coeffs);
        out["assumptions"] = nlohmann::json::parse(rep.to_json());
        pass = pass && rep.all_pass();
        for (const auto& e : rep.entries)
            std::cout << "assumption " << e.name << ": " << (e.pass ? "pass" : "FAIL")
                      << " (statistic " << e.statistic << ", bound " << e.bound << ")"
                      << (e.witness.empty() ? "" : " at " + e.witness) << "\n";
        std::cout << "minimal passing K: " << rep.minimal_passing_K << "\n";

        if (cfg.lipschitz() && cfg.channels > 0) {
            RngStream rng(cfg.master_seed ^ 0x9042);
            ProbeReport probe = lipschitz_probe(setup.model, 256, rng);
            out["lipschitz_probe"] = nlohmann::json::parse(probe.to_json());
            pass = pass && probe.pass;
            std::cout << "lipschitz probe: " << (probe.pass ? "pass" : "FAIL")
                      << " (max ratio " << probe.max_ratio << " vs K " << probe.bound
                      << ")\n";
        } else if (!cfg.lipschitz()) {
            const bool ok = setup.model.channel_sum_ok();
            out["channel_bound"] = {{"pass", ok},
                                    {"statistic", setup.model.channel_sum_statistic()},
                                    {"bound", cfg.K}};
            pass = pass && ok;
            std::cout << "channel bound: " << (ok ? "pass" : "FAIL") << " (sum "
                      << setup.model.channel_sum_statistic() << " vs K " << cfg.K << ")\n";
        }
    }
    out["pass"] = pass;

    const std::string dir = resolve_out_dir(cfg, out_flag);
    std::filesystem::create_directories(dir);
    std::ofstream os(dir + "/validate.json", std::ios::trunc);
    os << out.dump(2) << "\n";
    std::cout << (pass ? "VALID" : "INVALID") << " (report: " << dir << "/validate.json)\n";
    return pass ? 0 : 1;
}

int cmd_ensemble(const std::string& config_path, const EnsembleOptions& opts) {
    RunConfig cfg;
    try {
        cfg = RunConfig::from_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        const auto t0 = std::chrono::steady_clock::now();
        EnsembleResult result = run_ensemble(cfg, opts);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        RenderedReport rendered = render_report(result.summary);
        std::cout << rendered.text;
        std::cout << "records + summary.json in " << result.out_dir << " (wall time " << secs
                  << " s)\n";
        return result.all_pass ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_estimate(const std::string& records_dir, const std::string& direction,
                 const std::string& lags_csv, const std::string& out_flag) {
    try {
        std::vector<PathRecord> records = load_records(records_dir);
        std::vector<std::vector<double>> series =
            direction == "time" ? time_series_for_estimation(records)
                                : space_series_for_estimation(records);
        if (series.empty()) throw std::invalid_argument("no usable series in " + records_dir);

        std::vector<std::size_t> lags;
        if (lags_csv.empty()) {
            lags = dyadic_lags(series.front().size());
        } else {
            for (const auto& tok : split_list(lags_csv))
                lags.push_back(std::size_t(std::stoull(tok)));
        }
        std::vector<std::size_t> usable;
        for (std::size_t lag : lags) {
            if (series.front().size() >= lag + 32) {
                usable.push_back(lag);
            } else {
                std::cerr << "warning: lag " << lag
                          << " dropped (fewer than 32 increments)\n";
            }
        }
        if (usable.size() < 2) throw std::invalid_argument("fewer than 2 usable lags");

        AggregatedExponent agg = aggregate_exponents(series, usable, direction);
        nlohmann::json out;
        out["fingerprint"] = records.front().fingerprint;
        out["direction"] = direction;
        out["estimate"] = agg.aggregate.estimate;
        out["half_width"] = agg.aggregate.half_width;
        out["r2"] = agg.aggregate.r2;
        out["series_used"] = agg.series_used;
        out["series_skipped"] = agg.series_skipped;
        out["lags"] = usable;

        const std::string dir = out_flag.empty() ? records_dir : out_flag;
        std::filesystem::create_directories(dir);
        {
            std::ofstream os(dir + "/exponents_" + direction + ".json", std::ios::trunc);
            os << out.dump(2) << "\n";
        }
        {
            std::ofstream os(dir + "/structure_" + direction + ".csv", std::ios::trunc);
            os << "# fingerprint=" << std::hex << records.front().fingerprint << std::dec
               << "\n";
            os << "lag,median_abs_increment,count\n";
            os.precision(17);
            for (std::size_t i = 0; i < agg.table.lags.size(); ++i)
                os << agg.table.lags[i] << "," << agg.table.median_increment[i] << ","
                   << agg.table.counts[i] << "\n";
        }
        std::cout << direction << " exponent: " << agg.aggregate.estimate << " +/- "
                  << agg.aggregate.half_width << " (r2 " << agg.aggregate.r2 << ", "
                  << agg.series_used << " series)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_report(const std::string& summary_path, const std::string& out_flag) {
    nlohmann::json summary;
    try {
        std::ifstream is(summary_path);
        if (!is) throw std::invalid_argument("cannot open " + summary_path);
        summary = nlohmann::json::parse(is);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        RenderedReport rendered = render_report(summary);
        std::cout << rendered.text;
        const std::string dir =
            out_flag.empty()
                ? std::filesystem::path(summary_path).parent_path().string()
                : out_flag;
        write_report(summary, dir.empty() ? "." : dir);
        return rendered.all_pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spde-lab: tamed semi-implicit SPDE ensembles with statistical checks"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checks_csv, records_dir, lags_csv;
    std::string direction = "time", summary_path;
    EnsembleOptions opts;
    std::uint64_t seed = 0;

    auto* validate = app.add_subcommand("validate", "check a run configuration");
    validate->add_option("--config", config_path, "config JSON path")->required();
    validate->add_option("--out", out_dir, "output directory");

    auto* ensemble = app.add_subcommand("ensemble", "run paths, checks and summary");
    ensemble->add_option("--config", config_path, "config JSON path")->required();
    ensemble->add_option("--out", out_dir, "output directory");
    ensemble->add_option("--workers", opts.workers, "worker threads (0 = hardware)");
    auto* seed_opt = ensemble->add_option("--seed", seed, "override the master seed");
    ensemble->add_option("--checks", checks_csv, "comma-separated check list");

    auto* estimate = app.add_subcommand("estimate", "exponents from recorded paths");
    estimate->add_option("--records", records_dir, "record directory")->required();
    estimate->add_option("--direction", direction, "time or space")
        ->check(CLI::IsMember({"time", "space"}));
    estimate->add_option("--lags", lags_csv, "comma-separated lag list");
    estimate->add_option("--out", out_dir, "output directory");

    auto* report = app.add_subcommand("report", "render summary.json as text + CSV");
    report->add_option("--summary", summary_path, "summary.json path")->required();
    report->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return cmd_validate(config_path, out_dir);
    if (ensemble->parsed()) {
        opts.out_dir = out_dir;
        opts.checks = split_list(checks_csv);
        if (!seed_opt->empty()) {
            opts.has_seed_override = true;
            opts.seed_override = seed;
        }
        return cmd_ensemble(config_path, opts);
    }
    if (estimate->parsed()) return cmd_estimate(records_dir, direction, lags_csv, out_dir);
    if (report->parsed()) return cmd_report(summary_path, out_dir);
    return 2;
}
