// Ensemble orchestration: runs the configured paths over a worker pool,
// persists the records and manifest, evaluates the enabled checks, and
// writes summary.json. All file writes happen after the workers return, in
// path order, so reruns with the same (config, seed) are byte-identical.
#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "spdelab/checks.hpp"
#include "spdelab/config.hpp"

namespace spdelab {

inline constexpr const char* kCodeVersion = "spde-lab 0.1.0";

struct EnsembleOptions {
    std::string out_dir;             // resolution: flag > config > $SPDE_LAB_OUT/run-<fp>
    int workers = 1;                 // 0: hardware concurrency
    std::vector<std::string> checks; // empty: every applicable check
    bool has_seed_override = false;
    std::uint64_t seed_override = 0;
};

// Check identifiers accepted by EnsembleOptions::checks.
std::vector<std::string> known_check_names();

std::string resolve_out_dir(const RunConfig& cfg, const std::string& flag_dir);

struct EnsembleResult {
    nlohmann::json summary;
    std::string out_dir;
    std::vector<PathRecord> records;
    bool all_pass = false;
};

// Runs the full pipeline. Throws on invalid config or IO failure.
EnsembleResult run_ensemble(RunConfig cfg, const EnsembleOptions& opts);

// Checks evaluated on already-loaded records (shared by run_ensemble and the
// record-directory commands).
nlohmann::json build_summary(const RunConfig& cfg, const PathSetup& setup,
                             const std::vector<PathRecord>& records,
                             const std::vector<std::string>& enabled_checks);

std::vector<PathRecord> load_records(const std::string& dir);

} // namespace spdelab
