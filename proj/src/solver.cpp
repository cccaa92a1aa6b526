#include "spdelab/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <limits>

#include "spdelab/norms.hpp"

namespace spdelab {

namespace {

inline double pow1p(double v, double q) {
    // v >= 0; q = 1 + lambda, with the common Burgers case q == 2 fast-pathed
    if (q == 2.0) return v * v;
    return std::pow(v, q);
}

} // namespace

double stability_budget(const GridSpec& grid, double K, double m, double lambda,
                        int channels) {
    const double advective = grid.spacing() / (2.0 * K * std::pow(2.0 * m, lambda));
    double budget = advective;
    if (channels > 0) budget = std::min(budget, 1.0 / (4.0 * K * K * channels));
    return budget;
}

Field explicit_drift(const Field& u, const CoefficientSet& coeffs, double m, double t) {
    const GridSpec& g = u.grid;
    const double phi = coeffs.modulation.factor(t);
    Field out(g);

    for (int i = 0; i < g.dim; ++i) {
        Field du = central_gradient(u, i);
        const Field& bi = coeffs.b[i];
        for (std::size_t p = 0; p < out.size(); ++p)
            out.values[p] += phi * bi.values[p] * du.values[p];
    }
    for (std::size_t p = 0; p < out.size(); ++p)
        out.values[p] += phi * coeffs.c.values[p] * u.values[p];

    // Tamed nonlinearity in conservative form: G = u_+^{1+lambda} h_m(u)
    // computed pointwise, then differenced per axis.
    const double q = 1.0 + coeffs.lambda;
    Field tamed(g);
    for (std::size_t p = 0; p < tamed.size(); ++p) {
        const double v = u.values[p];
        tamed.values[p] = v > 0 ? pow1p(v, q) * h_cutoff(v, m) : 0.0;
    }
    for (int i = 0; i < g.dim; ++i) {
        Field dG = central_gradient(tamed, i);
        const AxisProfile& bbar = coeffs.b_bar[i];
        for (std::size_t p = 0; p < out.size(); ++p)
            out.values[p] += phi * bbar.at_flat(g, p) * dG.values[p];
    }
    return out;
}

Field drift_rhs(const Field& u, const CoefficientSet& coeffs, double m, double t) {
    Field out = laplacian_like(u, coeffs);
    Field expl = explicit_drift(u, coeffs, m, t);
    for (std::size_t p = 0; p < out.size(); ++p) out.values[p] += expl.values[p];
    return out;
}

std::optional<StopRecord> detect_stop(const SolverState& state) {
    double worst = 0;
    std::size_t at = 0;
    for (std::size_t p = 0; p < state.u.size(); ++p) {
        const double v = std::fabs(state.u.values[p]);
        if (v > worst) { worst = v; at = p; }
    }
    if (worst >= state.m) return StopRecord{state.t, at, state.u.values[at]};
    return std::nullopt;
}

struct ImplicitOperator::SparseImpl {
    Eigen::SparseMatrix<double> matrix;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
};

ImplicitOperator::~ImplicitOperator() = default;
ImplicitOperator::ImplicitOperator(ImplicitOperator&&) noexcept = default;

ImplicitOperator::ImplicitOperator(const CoefficientSet& coeffs, double dt)
    : grid_(coeffs.grid), dt_(dt), spectral_(coeffs.a_spatially_constant()) {
    if (!(dt > 0)) throw std::invalid_argument("ImplicitOperator: dt must be positive");
    if (spectral_) {
        symbol_ = stencil_operator_symbol(grid_, coeffs.a_constants());
        workspace_ = std::make_unique<SpectralWorkspace>(grid_);
        return;
    }

    // Assemble I - dt * sum_ij a^ij(x) D^2_ij once; the coefficients are
    // frozen in time so one factorization serves the whole run.
    const GridSpec& g = grid_;
    const int n = g.n;
    const double h = g.spacing();
    const double invh2 = 1.0 / (h * h);
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    const Eigen::Index size = Eigen::Index(g.size());
    trips.reserve(std::size_t(size) * (g.dim == 1 ? 3 : 9));

    if (g.dim == 1) {
        const Field& a = coeffs.a_entry(0, 0);
        for (int i = 0; i < n; ++i) {
            const double w = dt * a.values[i] * invh2;
            const int ip = i + 1 == n ? 0 : i + 1;
            const int im = i == 0 ? n - 1 : i - 1;
            trips.emplace_back(i, i, 1.0 + 2.0 * w);
            trips.emplace_back(i, ip, -w);
            trips.emplace_back(i, im, -w);
        }
    } else {
        const Field& a00 = coeffs.a_entry(0, 0);
        const Field& a11 = coeffs.a_entry(1, 1);
        const Field& a01 = coeffs.a_entry(0, 1);
        const Field& a10 = coeffs.a_entry(1, 0);
        for (int j = 0; j < n; ++j) {
            const int jp = j + 1 == n ? 0 : j + 1;
            const int jm = j == 0 ? n - 1 : j - 1;
            for (int i = 0; i < n; ++i) {
                const int ip = i + 1 == n ? 0 : i + 1;
                const int im = i == 0 ? n - 1 : i - 1;
                const Eigen::Index row = Eigen::Index(g.index(i, j));
                const double w0 = dt * a00.values[row] * invh2;
                const double w1 = dt * a11.values[row] * invh2;
                const double wx =
                    dt * (a01.values[row] + a10.values[row]) * 0.25 * invh2;
                trips.emplace_back(row, row, 1.0 + 2.0 * (w0 + w1));
                trips.emplace_back(row, Eigen::Index(g.index(ip, j)), -w0);
                trips.emplace_back(row, Eigen::Index(g.index(im, j)), -w0);
                trips.emplace_back(row, Eigen::Index(g.index(i, jp)), -w1);
                trips.emplace_back(row, Eigen::Index(g.index(i, jm)), -w1);
                trips.emplace_back(row, Eigen::Index(g.index(ip, jp)), -wx);
                trips.emplace_back(row, Eigen::Index(g.index(im, jm)), -wx);
                trips.emplace_back(row, Eigen::Index(g.index(ip, jm)), wx);
                trips.emplace_back(row, Eigen::Index(g.index(im, jp)), wx);
            }
        }
    }
    sparse_ = std::make_unique<SparseImpl>();
    sparse_->matrix.resize(size, size);
    sparse_->matrix.setFromTriplets(trips.begin(), trips.end());
    sparse_->matrix.makeCompressed();
    sparse_->lu.compute(sparse_->matrix);
    if (sparse_->lu.info() != Eigen::Success)
        throw std::runtime_error("ImplicitOperator: sparse factorization failed");
}

void ImplicitOperator::solve(const Field& rhs, Field& out) {
    if (spectral_) {
        workspace_->resolvent_solve(rhs, symbol_, dt_, out);
        return;
    }
    Eigen::Map<const Eigen::VectorXd> b(rhs.values.data(), Eigen::Index(rhs.size()));
    Eigen::VectorXd x = sparse_->lu.solve(b);
    if (sparse_->lu.info() != Eigen::Success)
        throw std::runtime_error("ImplicitOperator: sparse solve failed");
    out.grid = rhs.grid;
    out.values.assign(x.data(), x.data() + x.size());
}

PathIntegrator::PathIntegrator(const CoefficientSet& coeffs, const NoiseModel& model,
                               double dt)
    : coeffs_(&coeffs), model_(&model), dt_(dt), op_(coeffs, dt) {
    if (model.channels > 0) require_same_grid(model.mu[0], coeffs.c, "PathIntegrator");
}

void PathIntegrator::step(SolverState& state) {
    if (state.stopped)
        throw std::logic_error("PathIntegrator::step: state already stopped");
    const double budget =
        stability_budget(coeffs_->grid, coeffs_->K, state.m, coeffs_->lambda,
                         model_->channels);
    if (dt_ > budget)
        throw StabilityBudgetError("dt " + std::to_string(dt_) + " exceeds step budget " +
                                   std::to_string(budget) + " at level m = " +
                                   std::to_string(state.m));

    const std::vector<double> dW = wiener_increments(state.rng, model_->channels, dt_);

    rhs_ = explicit_drift(state.u, *coeffs_, state.m, state.t);
    for (std::size_t p = 0; p < rhs_.size(); ++p)
        rhs_.values[p] = state.u.values[p] + dt_ * rhs_.values[p];
    if (model_->channels > 0) {
        const double taming =
            model_->regime == NoiseRegime::SuperLinear ? state.m : 0.0;
        Field kick = diffusion_apply(*model_, state.u, dW, taming);
        for (std::size_t p = 0; p < rhs_.size(); ++p) rhs_.values[p] += kick.values[p];
    }

    op_.solve(rhs_, unew_);
    state.u.values.swap(unew_.values);
    state.t += dt_;
    if (!state.u.all_finite()) {
        state.stopped = true;
        state.stop_reason = "numerical blow-up";
    }
}

PathRecord run_path(const PathSetup& setup, std::uint32_t path_index) {
    const GridSpec& g = setup.grid();
    setup.cutoff.validate();

    PathRecord rec;
    rec.fingerprint = setup.fingerprint;
    rec.path_index = path_index;
    rec.dim = std::uint32_t(g.dim);
    rec.n = std::uint32_t(g.n);
    rec.half_length = g.half_length;
    rec.dt = setup.dt;
    rec.t_final = setup.t_final;
    rec.psi_k = setup.recording.psi_k;
    rec.bessel_p = setup.recording.bessel_p;
    rec.bessel_gammas = setup.recording.bessel_gammas;
    rec.p_list = setup.recording.p_list;
    rec.probes = setup.recording.probe_indices;
    rec.lp_series.resize(rec.p_list.size());
    rec.probe_series.resize(rec.probes.size());

    const std::size_t n_steps = setup.step_count();
    const std::size_t reserve = n_steps + 1;
    rec.sup_series.reserve(reserve);
    rec.l1_series.reserve(reserve);
    rec.psi_l1_series.reserve(reserve);
    for (auto& s : rec.lp_series) s.reserve(reserve);
    for (auto& s : rec.probe_series) s.reserve(reserve);

    PathIntegrator integrator(setup.coeffs, setup.model, setup.dt);
    SolverState state;
    state.u = setup.u0;
    state.m = setup.cutoff.m0;
    state.rng = RngStream::for_path(setup.master_seed, path_index);

    const Field psi = psi_weight(g, setup.recording.psi_k).values;
    const double vol = g.cell_volume();
    SpectralWorkspace bessel_ws(g);
    std::vector<std::vector<double>> bessel_symbols;
    for (double gamma : setup.recording.bessel_gammas)
        bessel_symbols.push_back(bessel_symbol(g, gamma));
    Field bessel_scratch(g);

    rec.sup_u0 = state.u.max_abs();
    rec.min_u = state.u.min_value();

    auto record_series = [&](const SolverState& s) {
        rec.sup_series.push_back(s.u.max_abs());
        double l1 = 0, weighted = 0;
        for (std::size_t p = 0; p < s.u.size(); ++p) {
            const double av = std::fabs(s.u.values[p]);
            l1 += av;
            weighted += av * psi.values[p];
        }
        rec.l1_series.push_back(l1 * vol);
        rec.psi_l1_series.push_back(weighted * vol);
        for (std::size_t j = 0; j < rec.p_list.size(); ++j)
            rec.lp_series[j].push_back(lp_norm(s.u, rec.p_list[j]));
        for (std::size_t j = 0; j < rec.probes.size(); ++j)
            rec.probe_series[j].push_back(s.u.values[rec.probes[j]]);
        rec.min_u = std::min(rec.min_u, s.u.min_value());
    };
    auto record_snapshot = [&](const SolverState& s, std::uint32_t step_i) {
        Snapshot snap;
        snap.time = s.t;
        snap.step = step_i;
        snap.values = s.u.values;
        for (std::size_t j = 0; j < bessel_symbols.size(); ++j)
            snap.bessel_norms.push_back(bessel_norm_cached(
                s.u, bessel_symbols[j], setup.recording.bessel_p, bessel_ws, bessel_scratch));
        rec.snapshots.push_back(std::move(snap));
    };

    record_series(state);
    auto next_snapshot = setup.recording.snapshot_steps.begin();
    const auto snapshot_end = setup.recording.snapshot_steps.end();
    if (next_snapshot != snapshot_end && *next_snapshot == 0) {
        record_snapshot(state, 0);
        ++next_snapshot;
    }

    // The initial data itself may already sit at or above the level.
    while (auto stop = detect_stop(state)) {
        const double next_m = state.m * setup.cutoff.growth;
        if (next_m > setup.cutoff.m_max) {
            rec.events.push_back({state.t, state.m, state.m,
                                  std::uint32_t(stop->witness_index), EventKind::Terminate});
            rec.termination = Termination::SuspectedBlowup;
            rec.termination_time = state.t;
            return rec;
        }
        rec.events.push_back({state.t, state.m, next_m, std::uint32_t(stop->witness_index),
                              EventKind::Paste});
        state.m = next_m;
    }

    for (std::size_t i = 1; i <= n_steps; ++i) {
        try {
            integrator.step(state);
        } catch (const StabilityBudgetError&) {
            rec.termination = Termination::StabilityBudget;
            rec.termination_time = state.t;
            rec.events.push_back({state.t, state.m, state.m, 0, EventKind::Terminate});
            return rec;
        }
        if (state.stopped) {
            rec.termination = Termination::NumericalBlowup;
            rec.termination_time = state.t;
            rec.events.push_back({state.t, state.m, state.m, 0, EventKind::Terminate});
            return rec;
        }
        bool terminated = false;
        while (auto stop = detect_stop(state)) {
            const double next_m = state.m * setup.cutoff.growth;
            if (next_m > setup.cutoff.m_max) {
                rec.events.push_back({state.t, state.m, state.m,
                                      std::uint32_t(stop->witness_index),
                                      EventKind::Terminate});
                rec.termination = Termination::SuspectedBlowup;
                rec.termination_time = state.t;
                terminated = true;
                break;
            }
            rec.events.push_back({state.t, state.m, next_m,
                                  std::uint32_t(stop->witness_index), EventKind::Paste});
            state.m = next_m;
        }
        if (terminated) return rec;

        record_series(state);
        if (next_snapshot != snapshot_end && *next_snapshot == i) {
            record_snapshot(state, std::uint32_t(i));
            ++next_snapshot;
        }
    }
    return rec;
}

} // namespace spdelab
