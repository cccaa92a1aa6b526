// Semi-implicit Euler-Maruyama integration of the tamed equation
//
//   du = ( a^ij u_{x^i x^j} + b^i u_{x^i} + c u
//          + bbar^i ( u_+^{1+lambda} h_m(u) )_{x^i} ) dt + sigma^k(u) dW^k,
//
// implicit in the second-order part only:
//
//   (I - dt A) u_{n+1} = u_n + dt * explicit_drift(u_n) + noise(u_n, dW).
//
// A is the a^ij stencil operator; it is diagonal in the DFT basis when a is
// spatially constant and otherwise factorized once per run (the operator
// does not change across steps). When the sup-norm reaches the taming level
// m the level is raised by the configured growth factor and integration
// continues from the stopping state; a path that would exceed m_max is
// terminated and flagged, never asserted to blow up.
#pragma once

#include <memory>
#include <optional>

#include "spdelab/coefficients.hpp"
#include "spdelab/cutoff.hpp"
#include "spdelab/fourier.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/record.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

struct CutoffSpec {
    double m0 = 2.0;
    double growth = 2.0;
    double m_max = 64.0;

    void validate() const {
        if (!(m0 > 0) || !(m_max > m0))
            throw std::invalid_argument("CutoffSpec: need 0 < m0 < m_max");
        if (!(growth > 1))
            throw std::invalid_argument("CutoffSpec: growth must exceed 1");
    }
};

struct StopRecord {
    double time = 0;
    std::size_t witness_index = 0;
    double value = 0;
};

struct SolverState {
    Field u;
    double t = 0;
    double m = 0;           // current taming level
    bool stopped = false;   // hard failure (NaN/Inf), not the taming trigger
    std::string stop_reason;
    RngStream rng;
};

// Step budget: explicit taming advection needs dt <= h / (2 K (2m)^lambda),
// and the multiplicative noise kick needs dt <= 1 / (4 K^2 K_ch).
double stability_budget(const GridSpec& grid, double K, double m, double lambda,
                        int channels);

// Thrown when dt exceeds the budget (e.g. after a level raise).
struct StabilityBudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// b^i u_{x^i} + c u + sum_i bbar^i D_i( u_+^{1+lambda} h_m(u) ), with the
// taming factor applied pointwise before differencing (conservative form).
Field explicit_drift(const Field& u, const CoefficientSet& coeffs, double m, double t = 0);

// Full drift a^ij u_{x^i x^j} + explicit_drift.
Field drift_rhs(const Field& u, const CoefficientSet& coeffs, double m, double t = 0);

// First crossing sup_x |u| >= m, if any, with the witnessing lattice point.
std::optional<StopRecord> detect_stop(const SolverState& state);

// (I - dt A)^{-1}; spectral when a is spatially constant, sparse LU otherwise.
class ImplicitOperator {
public:
    ImplicitOperator(const CoefficientSet& coeffs, double dt);
    ~ImplicitOperator();
    ImplicitOperator(ImplicitOperator&&) noexcept;

    void solve(const Field& rhs, Field& out);
    bool spectral() const { return spectral_; }
    double dt() const { return dt_; }

private:
    struct SparseImpl;
    GridSpec grid_;
    double dt_;
    bool spectral_;
    std::vector<double> symbol_;
    std::unique_ptr<SpectralWorkspace> workspace_;
    std::unique_ptr<SparseImpl> sparse_;
};

// Owns the per-path work buffers; one instance per worker.
class PathIntegrator {
public:
    PathIntegrator(const CoefficientSet& coeffs, const NoiseModel& model, double dt);

    // One Euler-Maruyama update. Advances rng exactly once. Throws
    // StabilityBudgetError if dt exceeds the budget at the current level;
    // marks the state stopped on NaN/Inf.
    void step(SolverState& state);

    const CoefficientSet& coeffs() const { return *coeffs_; }
    const NoiseModel& model() const { return *model_; }
    double dt() const { return dt_; }

private:
    const CoefficientSet* coeffs_;
    const NoiseModel* model_;
    double dt_;
    ImplicitOperator op_;
    Field rhs_, unew_;
};

struct RecordingSpec {
    std::vector<double> p_list;
    double psi_k = 12.0;
    double bessel_p = 2.0;
    std::vector<double> bessel_gammas = {0.5};
    std::vector<std::uint32_t> probe_indices;
    std::vector<std::uint32_t> snapshot_steps; // ascending, may include 0
};

struct PathSetup {
    CoefficientSet coeffs;
    NoiseModel model;
    CutoffSpec cutoff;
    Field u0;
    double t_final = 0.25;
    double dt = 1e-4;
    std::uint64_t master_seed = 0;
    std::uint64_t fingerprint = 0;
    RecordingSpec recording;

    const GridSpec& grid() const { return coeffs.grid; }
    std::size_t step_count() const { return std::size_t(std::llround(t_final / dt)); }
};

// Integrate one path from u0 to t_final, pasting across taming levels, and
// record the configured series/snapshots/events. Never throws on blow-up;
// failures are flagged in the record.
PathRecord run_path(const PathSetup& setup, std::uint32_t path_index);

} // namespace spdelab
