#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "spdelab/norms.hpp"
#include "spdelab/solver.hpp"

using namespace spdelab;

namespace {

CoefficientSet heat_coeffs(const GridSpec& g, double b_bar = 0.0, double K = 1.0,
                           double lambda = 1.0) {
    std::vector<double> a(std::size_t(g.dim) * g.dim, 0.0);
    for (int i = 0; i < g.dim; ++i) a[std::size_t(i) * g.dim + i] = 1.0;
    return CoefficientSet::constant(g, a, std::vector<double>(g.dim, 0.0), 0.0,
                                    std::vector<double>(g.dim, b_bar), K, lambda);
}

NoiseModel no_noise(const GridSpec& g) {
    return make_noise_model(g, NoiseRegime::Lipschitz, 0, "geometric:0.5", 0.0, 0.5, 1.0);
}

Field gaussian_bump(const GridSpec& g, double amp, double width) {
    return Field::sample(g, [=](double x, double y) {
        return amp * std::exp(-(x * x + y * y) / (2.0 * width * width));
    });
}

Field cosine_hump(const GridSpec& g, double amp) {
    const double L = g.half_length;
    return Field::sample(g, [=](double x, double y) {
        double v = 0.5 * (1.0 + std::cos(M_PI * x / L));
        if (g.dim == 2) v *= 0.5 * (1.0 + std::cos(M_PI * y / L));
        return amp * v;
    });
}

// closed-form heat evolution of a gaussian, wrapped onto the torus
Field heat_oracle_gaussian(const GridSpec& g, double amp, double width, double t) {
    const double var = width * width + 2.0 * t;
    const double scale = amp * width / std::sqrt(var);
    const double L = g.half_length;
    return Field::sample(g, [=](double x, double) {
        double s = 0;
        for (int im = -1; im <= 1; ++im) {
            const double xx = x + 2.0 * L * im;
            s += scale * std::exp(-xx * xx / (2.0 * var));
        }
        return s;
    });
}

PathSetup basic_setup(const CoefficientSet& coeffs, const NoiseModel& model, Field u0,
                      double T, double dt) {
    PathSetup s;
    s.coeffs = coeffs;
    s.model = model;
    s.u0 = std::move(u0);
    s.t_final = T;
    s.dt = dt;
    s.cutoff.m0 = std::max(2.0 * s.u0.max_abs(), 1.0);
    s.cutoff.m_max = 1024.0;
    s.master_seed = 2024;
    s.recording.p_list = {8.0};
    s.recording.psi_k = 12.0;
    s.recording.probe_indices = {std::uint32_t(coeffs.grid.n / 4),
                                 std::uint32_t(coeffs.grid.n / 2)};
    return s;
}

} // namespace

TEST_CASE("stability budget formula") {
    GridSpec g(1, 256, 16.0);
    const double h = g.spacing();
    CHECK(stability_budget(g, 1.0, 2.0, 1.0, 0) == doctest::Approx(h / 8.0));
    CHECK(stability_budget(g, 1.0, 2.0, 1.0, 16) ==
          doctest::Approx(std::min(h / 8.0, 1.0 / 64.0)));
    // noise term dominates for many channels
    CHECK(stability_budget(g, 2.0, 1.0, 0.5, 64) == doctest::Approx(1.0 / (16.0 * 64.0)));
}

TEST_CASE("drift_rhs: zero field and tamed telescoping") {
    GridSpec g(1, 128, 8.0);
    CoefficientSet coeffs = heat_coeffs(g, 0.7);
    Field zero(g);
    Field rhs = drift_rhs(zero, coeffs, 2.0);
    for (double v : rhs.values) CHECK(v == 0.0);

    // axis-independent bbar: the tamed advection telescopes to zero mass
    RngStream rng(9);
    Field u(g);
    for (auto& v : u.values) v = 2.0 * rng.next_uniform() - 0.5;
    Field expl = explicit_drift(u, coeffs, 1.5);
    double total = 0, scale = 0;
    for (double v : expl.values) {
        total += v;
        scale += std::fabs(v);
    }
    CHECK(std::fabs(total) <= 1e-12 * std::max(scale, 1.0));
}

TEST_CASE("drift_rhs: huge level reduces to (u^2)_x against a direct stencil") {
    GridSpec g(1, 256, 8.0);
    CoefficientSet coeffs = heat_coeffs(g, 1.0, 1.0, 1.0);
    Field u = Field::sample(g, [](double x, double) {
        return 1.5 + std::sin(M_PI * x / 8.0); // positive smooth profile
    });
    const double m_huge = 1e9; // h_m == 1 on the whole range
    Field got = drift_rhs(u, coeffs, m_huge);

    Field u2(g);
    for (std::size_t p = 0; p < g.size(); ++p) u2.values[p] = u.values[p] * u.values[p];
    Field expect = central_gradient(u2, 0);
    Field lap = second_difference(u, 0);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double ref = lap.values[p] + expect.values[p];
        CHECK(got.values[p] == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("step: resolvent action on a discrete eigenmode") {
    GridSpec g(1, 256, 16.0);
    CoefficientSet coeffs = heat_coeffs(g);
    NoiseModel model = no_noise(g);
    const double dt = 1e-3;

    const int mode = 4;
    const double xi = mode * M_PI / g.half_length;
    Field u = Field::sample(g, [xi](double x, double) { return std::cos(xi * x); });
    const double h = g.spacing();
    const double kappa = (2.0 / (h * h)) * (1.0 - std::cos(xi * h));

    PathIntegrator integ(coeffs, model, dt);
    SolverState st;
    st.u = u;
    st.m = 2.0; // bbar = 0, the taming level only enters the step budget
    st.rng = RngStream(1);
    integ.step(st);
    for (std::size_t p = 0; p < g.size(); ++p)
        CHECK(st.u.values[p] ==
              doctest::Approx(u.values[p] / (1.0 + dt * kappa)).epsilon(1e-11));
    CHECK(st.t == dt);
}

TEST_CASE("step: zero is a fixed point") {
    GridSpec g(1, 64, 8.0);
    CoefficientSet coeffs = heat_coeffs(g, 1.0);
    NoiseModel model =
        make_noise_model(g, NoiseRegime::Lipschitz, 8, "modal:0.5", 0.9, 0.5, 1.0);
    PathIntegrator integ(coeffs, model, 1e-3);
    SolverState st;
    st.u = Field(g);
    st.m = 4.0;
    st.rng = RngStream(77);
    for (int i = 0; i < 20; ++i) integ.step(st);
    for (double v : st.u.values) CHECK(v == 0.0);
}

TEST_CASE("step: consistency order via Richardson ratio") {
    GridSpec g(1, 128, 8.0);
    // variable a exercises the sparse factorization path
    CoefficientSet coeffs = heat_coeffs(g, 0.5, 2.0);
    coeffs.a[0] = Field::sample(
        g, [](double x, double) { return 1.0 + 0.3 * std::sin(M_PI * x / 8.0); });
    coeffs.b[0] = Field(g, 0.2);
    coeffs.c = Field(g, -0.1);
    NoiseModel model = no_noise(g);

    Field u = Field::sample(g, [](double x, double) {
        return 0.8 * std::exp(-x * x / 2.0) + 0.1 * std::cos(M_PI * x / 8.0) + 0.2;
    });
    const double m = 2.0;
    Field drift = drift_rhs(u, coeffs, m);

    auto one_step_error = [&](double dt) {
        PathIntegrator integ(coeffs, model, dt);
        SolverState st;
        st.u = u;
        st.m = m;
        st.rng = RngStream(5);
        integ.step(st);
        double err = 0;
        for (std::size_t p = 0; p < g.size(); ++p)
            err = std::max(err, std::fabs((st.u.values[p] - u.values[p]) / dt -
                                          drift.values[p]));
        return err;
    };
    const double e1 = one_step_error(2e-4);
    const double e2 = one_step_error(1e-4);
    const double e3 = one_step_error(5e-5);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.12));
    CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.12));
}

TEST_CASE("implicit operator: sparse path residual at the LU tolerance") {
    GridSpec g(2, 32, 4.0);
    CoefficientSet coeffs = heat_coeffs(g);
    coeffs.a[0] = Field::sample(g, [](double x, double y) {
        return 1.2 + 0.3 * std::sin(M_PI * x / 4.0) * std::cos(M_PI * y / 4.0);
    });
    coeffs.a[3] = Field::sample(
        g, [](double x, double y) { return 1.0 + 0.2 * std::cos(M_PI * (x + y) / 4.0); });
    Field off = Field::sample(
        g, [](double x, double y) { return 0.15 * std::sin(M_PI * (x - y) / 4.0); });
    coeffs.a[1] = off;
    coeffs.a[2] = off;

    const double dt = 1e-3;
    ImplicitOperator op(coeffs, dt);
    CHECK_FALSE(op.spectral());

    RngStream rng(31);
    Field rhs(g);
    for (auto& v : rhs.values) v = 2.0 * rng.next_uniform() - 1.0;
    Field x(g);
    op.solve(rhs, x);
    Field lap = laplacian_like(x, coeffs);
    double resid = 0, scale = 0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        resid = std::max(resid, std::fabs(x.values[p] - dt * lap.values[p] - rhs.values[p]));
        scale = std::max(scale, std::fabs(rhs.values[p]));
    }
    CHECK(resid <= 1e-10 * scale);
}

TEST_CASE("step: budget precondition raises a typed error") {
    GridSpec g(1, 64, 8.0);
    CoefficientSet coeffs = heat_coeffs(g, 1.0);
    NoiseModel model = no_noise(g);
    PathIntegrator integ(coeffs, model, 0.5); // far past the budget
    SolverState st;
    st.u = Field(g, 0.5);
    st.m = 8.0;
    st.rng = RngStream(1);
    CHECK_THROWS_AS(integ.step(st), StabilityBudgetError);
}

TEST_CASE("detect_stop: never, exponential crossing, immediate") {
    GridSpec g(1, 64, 8.0);
    SolverState st;
    st.u = Field(g);
    st.m = 1.0;
    CHECK_FALSE(detect_stop(st).has_value());

    st.u = Field(g, 2.0);
    st.t = 0.7;
    auto stop = detect_stop(st);
    REQUIRE(stop.has_value());
    CHECK(stop->time == 0.7);
    CHECK(stop->value == 2.0);

    // c > 0 pure growth: u(t) = u0 e^{ct} crosses m = 1 at t* = ln(1/u0)/c
    CoefficientSet coeffs = heat_coeffs(g, 0.0, 2.0);
    coeffs.c = Field(g, 2.0);
    NoiseModel model = no_noise(g);
    const double dt = 1e-3;
    PathIntegrator integ(coeffs, model, dt);
    SolverState grow;
    grow.u = Field(g, 0.25);
    grow.m = 1.0;
    grow.rng = RngStream(3);
    double trigger = -1;
    for (int i = 0; i < 2000; ++i) {
        integ.step(grow);
        if (auto s = detect_stop(grow)) {
            trigger = s->time;
            break;
        }
    }
    const double t_star = std::log(1.0 / 0.25) / 2.0;
    REQUIRE(trigger > 0);
    CHECK(std::fabs(trigger - t_star) <= 2 * dt);
}

TEST_CASE("run_path: matches the periodic heat oracle") {
    GridSpec g(1, 256, 16.0);
    PathSetup setup = basic_setup(heat_coeffs(g), no_noise(g), gaussian_bump(g, 1.0, 1.0),
                                  0.1, 1e-4);
    setup.recording.snapshot_steps = {0, std::uint32_t(setup.step_count())};
    PathRecord rec = run_path(setup, 0);
    CHECK(rec.termination == Termination::Completed);
    REQUIRE(rec.snapshots.size() == 2);

    Field got(g, rec.snapshots[1].values);
    Field expect = heat_oracle_gaussian(g, 1.0, 1.0, 0.1);
    Field diff(g);
    for (std::size_t p = 0; p < g.size(); ++p)
        diff.values[p] = got.values[p] - expect.values[p];
    const double rel = lp_norm(diff, 2.0) / lp_norm(expect, 2.0);
    CHECK(rel <= 1e-3);
}

TEST_CASE("run_path: zero initial data stays zero with no events") {
    GridSpec g(1, 64, 8.0);
    NoiseModel model =
        make_noise_model(g, NoiseRegime::Lipschitz, 8, "modal:0.5", 0.9, 0.5, 1.0);
    PathSetup setup = basic_setup(heat_coeffs(g, 1.0), model, Field(g), 0.02, 1e-3);
    PathRecord rec = run_path(setup, 3);
    CHECK(rec.termination == Termination::Completed);
    CHECK(rec.events.empty());
    for (double v : rec.sup_series) CHECK(v == 0.0);
    for (double v : rec.l1_series) CHECK(v == 0.0);
    for (double v : rec.psi_l1_series) CHECK(v == 0.0);
}

TEST_CASE("run_path: mass budget with c = b = 0, sigma = 0, any bbar") {
    GridSpec g(1, 128, 8.0);
    CoefficientSet coeffs = heat_coeffs(g, 0.8);
    NoiseModel model = no_noise(g);
    const double dt = 1e-4;
    PathIntegrator integ(coeffs, model, dt);
    SolverState st;
    st.u = gaussian_bump(g, 1.0, 1.0);
    st.m = 4.0;
    st.rng = RngStream(8);
    double mass0 = 0;
    for (double v : st.u.values) mass0 += v;
    mass0 *= g.cell_volume();
    for (int i = 0; i < 500; ++i) {
        integ.step(st);
        double mass = 0;
        for (double v : st.u.values) mass += v;
        mass *= g.cell_volume();
        CHECK(std::fabs(mass - mass0) <= 1e-10 * std::fabs(mass0));
    }
}

TEST_CASE("run_path: positivity of the tamed flow") {
    GridSpec g(1, 512, 16.0);
    CoefficientSet coeffs = heat_coeffs(g, 1.0);
    NoiseModel model =
        make_noise_model(g, NoiseRegime::Lipschitz, 16, "modal:0.5", 0.8, 0.5, 1.0);
    PathSetup setup =
        basic_setup(coeffs, model, cosine_hump(g, 1.0), 0.05, 1e-4);
    PathRecord rec = run_path(setup, 1);
    CHECK(rec.termination == Termination::Completed);
    CHECK(rec.min_u >= -1e-6 * rec.sup_u0);
}

TEST_CASE("run_path: noise kick is degree-1 in dW through the solve") {
    GridSpec g(1, 128, 8.0);
    CoefficientSet coeffs = heat_coeffs(g, 0.5);
    NoiseModel model =
        make_noise_model(g, NoiseRegime::Lipschitz, 8, "modal:0.5", 0.9, 0.5, 1.0);
    const double dt = 1e-4;
    Field u = cosine_hump(g, 1.0);
    const double m = 4.0;

    RngStream rng(21);
    auto dW = wiener_increments(rng, 8, dt);

    Field expl = explicit_drift(u, coeffs, m);
    Field drift_rhs_only(g);
    for (std::size_t p = 0; p < g.size(); ++p)
        drift_rhs_only.values[p] = u.values[p] + dt * expl.values[p];

    ImplicitOperator op(coeffs, dt);
    Field u_drift(g);
    op.solve(drift_rhs_only, u_drift);

    auto advance = [&](double scale) {
        std::vector<double> w = dW;
        for (auto& v : w) v *= scale;
        Field kick = diffusion_apply(model, u, w);
        Field rhs(g);
        for (std::size_t p = 0; p < g.size(); ++p)
            rhs.values[p] = drift_rhs_only.values[p] + kick.values[p];
        Field out(g);
        op.solve(rhs, out);
        return out;
    };
    Field u1 = advance(1.0);
    Field u2 = advance(2.0);
    double max_dev = 0, scale = 0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double d1 = u1.values[p] - u_drift.values[p];
        const double d2 = u2.values[p] - u_drift.values[p];
        max_dev = std::max(max_dev, std::fabs(d2 - 2.0 * d1));
        scale = std::max(scale, std::fabs(d1));
    }
    CHECK(max_dev <= 2e-13 * std::max(scale, 1e-30));
}

TEST_CASE("run_path: taming-level consistency is bit-exact up to the trigger") {
    GridSpec g(1, 128, 8.0);
    CoefficientSet coeffs = heat_coeffs(g, 1.0);
    NoiseModel model =
        make_noise_model(g, NoiseRegime::Lipschitz, 8, "modal:0.5", 0.95, 0.5, 1.0);
    PathSetup setup = basic_setup(coeffs, model, cosine_hump(g, 1.0), 0.3, 1e-3);
    setup.cutoff.m0 = 1.02; // just above sup u0, so noise can cross it
    PathSetup doubled = setup;
    doubled.cutoff.m0 = 2.04;

    PathRecord ra = run_path(setup, 5);
    PathRecord rb = run_path(doubled, 5);

    // find the first paste of the lower-level run
    std::size_t trigger_step = ra.sup_series.size();
    for (const auto& e : ra.events)
        if (e.kind == EventKind::Paste) {
            trigger_step = std::size_t(std::llround(e.time / setup.dt));
            break;
        }
    REQUIRE(trigger_step < ra.sup_series.size()); // the run must actually paste
    for (std::size_t i = 0; i <= trigger_step; ++i) {
        CHECK(ra.sup_series[i] == rb.sup_series[i]);
        CHECK(ra.l1_series[i] == rb.l1_series[i]);
        for (std::size_t j = 0; j < ra.probe_series.size(); ++j)
            CHECK(ra.probe_series[j][i] == rb.probe_series[j][i]);
    }
    // identical rng and a shared level after the paste: the tails agree too
    CHECK(ra.sup_series.back() == rb.sup_series.back());
}

TEST_CASE("run_path: determinism and blow-up flagging") {
    GridSpec g(1, 64, 8.0);
    CoefficientSet coeffs = heat_coeffs(g, 1.0, 2.0);
    coeffs.c = Field(g, 2.0); // strong growth to force pasting
    NoiseModel model =
        make_noise_model(g, NoiseRegime::Lipschitz, 4, "modal:0.5", 0.5, 0.5, 2.0);
    PathSetup setup = basic_setup(coeffs, model, cosine_hump(g, 1.0), 4.0, 1e-3);
    setup.cutoff.m0 = 2.0;
    setup.cutoff.m_max = 16.0;

    PathRecord r1 = run_path(setup, 9);
    PathRecord r2 = run_path(setup, 9);
    CHECK(r1.termination == Termination::SuspectedBlowup);
    CHECK(r1.termination_time == r2.termination_time);
    REQUIRE(r1.sup_series.size() == r2.sup_series.size());
    for (std::size_t i = 0; i < r1.sup_series.size(); ++i)
        CHECK(r1.sup_series[i] == r2.sup_series[i]);
    CHECK(!r1.events.empty());
    CHECK(r1.events.back().kind == EventKind::Terminate);
}

TEST_CASE("run_path: d=2 heat flow against the product oracle") {
    GridSpec g(2, 64, 8.0);
    PathSetup setup = basic_setup(heat_coeffs(g), no_noise(g), gaussian_bump(g, 1.0, 1.0),
                                  0.05, 1e-3);
    setup.recording.probe_indices = {std::uint32_t(g.index(16, 16))};
    setup.recording.snapshot_steps = {std::uint32_t(setup.step_count())};
    PathRecord rec = run_path(setup, 0);
    CHECK(rec.termination == Termination::Completed);
    REQUIRE(rec.snapshots.size() == 1);

    const double t = 0.05;
    const double var = 1.0 + 2.0 * t;
    Field expect = Field::sample(g, [var](double x, double y) {
        return (1.0 / var) * std::exp(-(x * x + y * y) / (2.0 * var));
    });
    Field got(g, rec.snapshots[0].values);
    Field diff(g);
    for (std::size_t p = 0; p < g.size(); ++p)
        diff.values[p] = got.values[p] - expect.values[p];
    CHECK(lp_norm(diff, 2.0) / lp_norm(expect, 2.0) <= 5e-3);
}
