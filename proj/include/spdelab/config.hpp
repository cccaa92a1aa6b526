// Run configuration: a single JSON file of flat sections, canonicalized
// (defaults resolved, keys sorted) before fingerprinting, so equivalent
// configs hash identically and artifacts from different runs cannot be
// mixed silently.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "spdelab/solver.hpp"

namespace spdelab {

struct RunConfig {
    // grid
    int dim = 1;
    int points = 256;
    double half_length = 0; // 0: derived as 16 x initial-data support radius

    // time
    double t_final = 0.25;
    double dt = 1e-4;
    int snapshots = 9;

    // coefficients
    std::string coeff_preset = "identity"; // identity | variable-smooth | inline
    double K = 1.0;
    double lambda = 1.0;
    std::vector<double> b_bar;          // per-axis constants, defaults to 1
    std::vector<double> a_inline;       // dim*dim entries (inline preset)
    std::vector<double> b_inline;       // dim entries (inline preset)
    double c_inline = 0.0;
    double modulation_amplitude = 0.0;
    double modulation_frequency = 1.0;

    // noise
    std::string regime = "lipschitz"; // lipschitz | superlinear
    int channels = 16;
    double lambda0 = 0.5;
    std::string mu_preset = "modal:0.5";
    double mu_scale = 0.25; // infinite-sum budget, must respect K
    double kappa = 0;       // super-linear embedding parameter; 0: midpoint

    // cutoff
    double m0 = 0; // 0: 2 x sup|u0|
    double growth = 2.0;
    double m_max = 64.0;

    // initial data
    std::string initial_preset = "gaussian-bump"; // | box | cosine-hump | custom
    double amplitude = 1.0;
    double width = 1.0;
    std::vector<double> samples; // custom preset

    // ensemble
    int paths = 256;
    std::uint64_t master_seed = 20240601;

    // output
    std::string directory;
    std::vector<double> p_list = {8.0};
    double psi_k = 12.0;
    int probes = 3;
    double moment_q = 0; // 0: largest p_list entry when more than one is given
    std::vector<double> bessel_gammas = {0.5};
    double bessel_p = 2.0;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::string& path);

    // defaults resolved, output directory excluded, keys sorted
    nlohmann::json canonical() const;
    std::uint64_t fingerprint() const;
    std::string fingerprint_hex() const;

    bool lipschitz() const { return regime == "lipschitz"; }
    double resolved_half_length() const;
    double resolved_kappa() const;
    double resolved_moment_q() const;
};

struct ConfigIssue {
    std::string field;
    std::string message;
};

struct ConfigValidation {
    std::vector<ConfigIssue> issues;
    bool ok() const { return issues.empty(); }
    std::string to_json() const;
};

// Invariant checks that need the materialized fields (grid, u0, budget).
ConfigValidation validate_config(const RunConfig& cfg);

// Materialize grid, coefficients, noise, initial data and recording plan.
PathSetup build_setup(const RunConfig& cfg);

Field build_initial_data(const RunConfig& cfg, const GridSpec& grid);
CoefficientSet build_coefficients(const RunConfig& cfg, const GridSpec& grid);

} // namespace spdelab
