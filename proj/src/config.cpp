#include "spdelab/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace spdelab {

namespace {

void check_known_keys(const nlohmann::json& j, const std::string& section,
                      const std::set<std::string>& known) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("config: unknown key '" + section + "." + it.key() +
                                        "'");
}

template <class T>
void read_to(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    check_known_keys(j, "",
                     {"grid", "time", "coefficients", "noise", "cutoff", "initial",
                      "ensemble", "output"});
    if (j.contains("grid")) {
        const auto& s = j.at("grid");
        check_known_keys(s, "grid", {"dim", "points", "half_length"});
        read_to(s, "dim", c.dim);
        read_to(s, "points", c.points);
        read_to(s, "half_length", c.half_length);
    }
    if (j.contains("time")) {
        const auto& s = j.at("time");
        check_known_keys(s, "time", {"t_final", "dt", "snapshots"});
        read_to(s, "t_final", c.t_final);
        read_to(s, "dt", c.dt);
        read_to(s, "snapshots", c.snapshots);
    }
    if (j.contains("coefficients")) {
        const auto& s = j.at("coefficients");
        check_known_keys(s, "coefficients",
                         {"preset", "K", "lambda", "b_bar", "a", "b", "c",
                          "modulation_amplitude", "modulation_frequency"});
        read_to(s, "preset", c.coeff_preset);
        read_to(s, "K", c.K);
        read_to(s, "lambda", c.lambda);
        read_to(s, "b_bar", c.b_bar);
        read_to(s, "a", c.a_inline);
        read_to(s, "b", c.b_inline);
        read_to(s, "c", c.c_inline);
        read_to(s, "modulation_amplitude", c.modulation_amplitude);
        read_to(s, "modulation_frequency", c.modulation_frequency);
    }
    if (j.contains("noise")) {
        const auto& s = j.at("noise");
        check_known_keys(s, "noise",
                         {"regime", "channels", "lambda0", "mu_preset", "mu_scale", "kappa"});
        read_to(s, "regime", c.regime);
        read_to(s, "channels", c.channels);
        read_to(s, "lambda0", c.lambda0);
        read_to(s, "mu_preset", c.mu_preset);
        read_to(s, "mu_scale", c.mu_scale);
        read_to(s, "kappa", c.kappa);
    }
    if (j.contains("cutoff")) {
        const auto& s = j.at("cutoff");
        check_known_keys(s, "cutoff", {"m0", "growth", "m_max"});
        read_to(s, "m0", c.m0);
        read_to(s, "growth", c.growth);
        read_to(s, "m_max", c.m_max);
    }
    if (j.contains("initial")) {
        const auto& s = j.at("initial");
        check_known_keys(s, "initial", {"preset", "amplitude", "width", "samples"});
        read_to(s, "preset", c.initial_preset);
        read_to(s, "amplitude", c.amplitude);
        read_to(s, "width", c.width);
        read_to(s, "samples", c.samples);
    }
    if (j.contains("ensemble")) {
        const auto& s = j.at("ensemble");
        check_known_keys(s, "ensemble", {"paths", "master_seed"});
        read_to(s, "paths", c.paths);
        read_to(s, "master_seed", c.master_seed);
    }
    if (j.contains("output")) {
        const auto& s = j.at("output");
        check_known_keys(s, "output",
                         {"directory", "p_list", "psi_k", "probes", "moment_q",
                          "bessel_gammas", "bessel_p"});
        read_to(s, "directory", c.directory);
        read_to(s, "p_list", c.p_list);
        read_to(s, "psi_k", c.psi_k);
        read_to(s, "probes", c.probes);
        read_to(s, "moment_q", c.moment_q);
        read_to(s, "bessel_gammas", c.bessel_gammas);
        read_to(s, "bessel_p", c.bessel_p);
    }
    if (c.b_bar.empty()) c.b_bar.assign(std::size_t(std::max(c.dim, 1)), 1.0);
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
    }
    return from_json(j);
}

double RunConfig::resolved_half_length() const {
    if (half_length > 0) return half_length;
    if (initial_preset == "gaussian-bump" || initial_preset == "box")
        return 16.0 * width;
    throw std::invalid_argument(
        "config: grid.half_length is required for initial preset '" + initial_preset + "'");
}

double RunConfig::resolved_kappa() const {
    if (lipschitz()) return 0.0;
    if (kappa > 0) return kappa;
    const double floor_k = std::max(lambda * dim, lambda0 * dim);
    return 0.5 * (floor_k + 1.0);
}

double RunConfig::resolved_moment_q() const {
    if (moment_q > 0) return moment_q;
    if (p_list.size() < 2) return 0.0;
    double q = p_list[0];
    for (double p : p_list) q = std::max(q, p);
    return q;
}

nlohmann::json RunConfig::canonical() const {
    nlohmann::json j;
    j["grid"] = {{"dim", dim}, {"points", points}, {"half_length", resolved_half_length()}};
    j["time"] = {{"t_final", t_final}, {"dt", dt}, {"snapshots", snapshots}};
    j["coefficients"] = {{"preset", coeff_preset},
                         {"K", K},
                         {"lambda", lambda},
                         {"b_bar", b_bar},
                         {"a", a_inline},
                         {"b", b_inline},
                         {"c", c_inline},
                         {"modulation_amplitude", modulation_amplitude},
                         {"modulation_frequency", modulation_frequency}};
    j["noise"] = {{"regime", regime},        {"channels", channels},
                  {"lambda0", lambda0},      {"mu_preset", mu_preset},
                  {"mu_scale", mu_scale},    {"kappa", resolved_kappa()}};
    j["cutoff"] = {{"m0", m0}, {"growth", growth}, {"m_max", m_max}};
    j["initial"] = {{"preset", initial_preset},
                    {"amplitude", amplitude},
                    {"width", width},
                    {"samples", samples}};
    j["ensemble"] = {{"paths", paths}, {"master_seed", master_seed}};
    j["output"] = {{"p_list", p_list},
                   {"psi_k", psi_k},
                   {"probes", probes},
                   {"moment_q", resolved_moment_q()},
                   {"bessel_gammas", bessel_gammas},
                   {"bessel_p", bessel_p}};
    return j;
}

std::uint64_t RunConfig::fingerprint() const { return fnv1a(canonical().dump()); }

std::string RunConfig::fingerprint_hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fingerprint();
    return os.str();
}

Field build_initial_data(const RunConfig& cfg, const GridSpec& grid) {
    const double amp = cfg.amplitude;
    const double w = cfg.width;
    if (cfg.initial_preset == "gaussian-bump") {
        return Field::sample(grid, [amp, w](double x, double y) {
            return amp * std::exp(-(x * x + y * y) / (2.0 * w * w));
        });
    }
    if (cfg.initial_preset == "box") {
        return Field::sample(grid, [amp, w](double x, double y) {
            return (x * x + y * y <= w * w) ? amp : 0.0;
        });
    }
    if (cfg.initial_preset == "cosine-hump") {
        const double L = grid.half_length;
        const int d = grid.dim;
        return Field::sample(grid, [amp, L, d](double x, double y) {
            double v = 0.5 * (1.0 + std::cos(M_PI * x / L));
            if (d == 2) v *= 0.5 * (1.0 + std::cos(M_PI * y / L));
            return amp * v;
        });
    }
    if (cfg.initial_preset == "custom") {
        if (cfg.samples.size() != grid.size())
            throw std::invalid_argument("config: initial.samples length must equal N^dim");
        return Field(grid, cfg.samples);
    }
    throw std::invalid_argument("config: unknown initial preset '" + cfg.initial_preset + "'");
}

CoefficientSet build_coefficients(const RunConfig& cfg, const GridSpec& grid) {
    const int d = grid.dim;
    std::vector<double> bbar = cfg.b_bar;
    if (int(bbar.size()) != d)
        throw std::invalid_argument("config: coefficients.b_bar needs one entry per axis");

    CoefficientSet out;
    if (cfg.coeff_preset == "identity") {
        std::vector<double> a(std::size_t(d) * d, 0.0);
        for (int i = 0; i < d; ++i) a[std::size_t(i) * d + i] = 1.0;
        out = CoefficientSet::constant(grid, a, std::vector<double>(d, 0.0), 0.0, bbar,
                                       cfg.K, cfg.lambda);
    } else if (cfg.coeff_preset == "variable-smooth") {
        std::vector<double> a(std::size_t(d) * d, 0.0);
        for (int i = 0; i < d; ++i) a[std::size_t(i) * d + i] = 1.0;
        out = CoefficientSet::constant(grid, a, std::vector<double>(d, 0.05), -0.05, bbar,
                                       cfg.K, cfg.lambda);
        const double L = grid.half_length;
        out.a[0] = Field::sample(grid, [L](double x, double y) {
            return 1.0 + 0.25 * std::sin(M_PI * x / L) * std::cos(M_PI * y / L);
        });
        if (d == 2)
            out.a[3] = Field::sample(grid, [L](double x, double y) {
                return 1.0 + 0.2 * std::cos(M_PI * (x + y) / L);
            });
        out.c = Field::sample(
            grid, [L](double x, double) { return -0.05 * (1.0 + std::sin(M_PI * x / L)); });
    } else if (cfg.coeff_preset == "inline") {
        std::vector<double> a = cfg.a_inline;
        std::vector<double> b = cfg.b_inline;
        if (a.empty()) {
            a.assign(std::size_t(d) * d, 0.0);
            for (int i = 0; i < d; ++i) a[std::size_t(i) * d + i] = 1.0;
        }
        if (b.empty()) b.assign(std::size_t(d), 0.0);
        out = CoefficientSet::constant(grid, a, b, cfg.c_inline, bbar, cfg.K, cfg.lambda);
    } else {
        throw std::invalid_argument("config: unknown coefficient preset '" +
                                    cfg.coeff_preset + "'");
    }
    out.modulation.amplitude = cfg.modulation_amplitude;
    out.modulation.frequency = cfg.modulation_frequency;
    return out;
}

PathSetup build_setup(const RunConfig& cfg) {
    GridSpec grid(cfg.dim, cfg.points, cfg.resolved_half_length());
    PathSetup setup;
    setup.coeffs = build_coefficients(cfg, grid);
    const NoiseRegime regime =
        cfg.lipschitz() ? NoiseRegime::Lipschitz : NoiseRegime::SuperLinear;
    setup.model = make_noise_model(grid, regime, cfg.channels, cfg.mu_preset, cfg.mu_scale,
                                   cfg.lambda0, cfg.K);
    setup.u0 = build_initial_data(cfg, grid);
    setup.t_final = cfg.t_final;
    setup.dt = cfg.dt;
    setup.master_seed = cfg.master_seed;
    setup.fingerprint = cfg.fingerprint();

    setup.cutoff.m0 = cfg.m0 > 0 ? cfg.m0 : 2.0 * setup.u0.max_abs();
    setup.cutoff.growth = cfg.growth;
    setup.cutoff.m_max = cfg.m_max;

    setup.recording.p_list = cfg.p_list;
    setup.recording.psi_k = cfg.psi_k;
    setup.recording.bessel_p = cfg.bessel_p;
    setup.recording.bessel_gammas = cfg.bessel_gammas;

    // probes at interior fractions of the domain (diagonal points in d=2)
    const int n = grid.n;
    for (int j = 0; j < cfg.probes; ++j) {
        const int i = int(std::llround(double(n) * (j + 1) / (cfg.probes + 1)));
        setup.recording.probe_indices.push_back(
            std::uint32_t(grid.dim == 1 ? grid.index(i) : grid.index(i, i)));
    }

    // geometric snapshot schedule, denser early, always ending at t_final
    const std::size_t n_steps = setup.step_count();
    std::set<std::uint32_t> snaps;
    if (cfg.snapshots == 1) {
        snaps.insert(std::uint32_t(n_steps));
    } else if (cfg.snapshots > 1) {
        snaps.insert(0);
        for (int j = 0; j < cfg.snapshots - 1; ++j) {
            const double frac = std::pow(2.0, -double(j));
            snaps.insert(std::uint32_t(std::llround(double(n_steps) * frac)));
        }
    }
    setup.recording.snapshot_steps.assign(snaps.begin(), snaps.end());
    return setup;
}

ConfigValidation validate_config(const RunConfig& cfg) {
    ConfigValidation v;
    auto issue = [&](const std::string& field, const std::string& msg) {
        v.issues.push_back({field, msg});
    };

    try {
        GridSpec grid(cfg.dim, cfg.points, cfg.resolved_half_length());

        // time grid sanity
        if (!(cfg.dt > 0)) issue("time.dt", "must be positive");
        if (!(cfg.t_final > 0)) issue("time.t_final", "must be positive");
        if (cfg.dt > 0 && cfg.t_final > 0) {
            const double ratio = cfg.t_final / cfg.dt;
            if (std::fabs(ratio - std::llround(ratio)) > 1e-6 * ratio)
                issue("time.dt", "t_final must be an integer number of steps");
        }

        // regime rules
        if (cfg.lipschitz()) {
            if (!(cfg.lambda > 0)) issue("coefficients.lambda", "must be positive");
            double pmin = cfg.p_list.empty() ? 0 : cfg.p_list[0];
            for (double p : cfg.p_list) pmin = std::min(pmin, p);
            if (cfg.p_list.empty() || pmin <= cfg.dim + 2)
                issue("output.p_list", "minimum entry must exceed d + 2 = " +
                                           std::to_string(cfg.dim + 2));
        } else if (cfg.regime == "superlinear") {
            const double lim = 1.0 / cfg.dim;
            if (!(cfg.lambda > 0 && cfg.lambda < lim))
                issue("coefficients.lambda", "super-linear regime needs lambda in (0, 1/d)");
            if (!(cfg.lambda0 > 0 && cfg.lambda0 < lim))
                issue("noise.lambda0", "super-linear regime needs lambda0 in (0, 1/d)");
            const double kap = cfg.resolved_kappa();
            const double floor_k = std::max(cfg.lambda * cfg.dim, cfg.lambda0 * cfg.dim);
            if (!(kap > floor_k && kap < 1))
                issue("noise.kappa", "kappa must lie in ((lambda d) v (lambda0 d), 1)");
            double pmin = cfg.p_list.empty() ? 0 : cfg.p_list[0];
            for (double p : cfg.p_list) pmin = std::min(pmin, p);
            const double p_floor = (cfg.dim + 2.0) / (1.0 - kap);
            if (cfg.p_list.empty() || pmin <= p_floor)
                issue("output.p_list",
                      "minimum entry must exceed (d+2)/(1-kappa) = " + std::to_string(p_floor));
        } else {
            issue("noise.regime", "must be 'lipschitz' or 'superlinear'");
        }

        if (cfg.channels < 0) issue("noise.channels", "must be nonnegative");
        if (cfg.lipschitz()) {
            if (cfg.mu_scale > cfg.K + 1e-12)
                issue("noise.mu_scale", "channel budget exceeds the constant K");
        } else if (cfg.mu_scale > cfg.K + 1e-12) {
            issue("noise.mu_scale", "pointwise channel budget exceeds the constant K");
        }

        // initial data must be nonnegative, with a witness
        Field u0 = build_initial_data(cfg, grid);
        for (std::size_t p = 0; p < u0.size(); ++p)
            if (u0.values[p] < 0) {
                std::ostringstream os;
                os << "negative value " << u0.values[p] << " at flat index " << p;
                issue("initial", os.str());
                break;
            }

        CutoffSpec cut;
        cut.m0 = cfg.m0 > 0 ? cfg.m0 : 2.0 * u0.max_abs();
        cut.growth = cfg.growth;
        cut.m_max = cfg.m_max;
        try {
            cut.validate();
        } catch (const std::exception& e) {
            issue("cutoff", e.what());
        }

        // step budget at the starting level
        const double budget =
            stability_budget(grid, cfg.K, cut.m0, cfg.lambda, cfg.channels);
        if (cfg.dt > budget) {
            std::ostringstream os;
            os << "dt " << cfg.dt << " exceeds the step budget " << budget
               << " at the starting level m0 = " << cut.m0;
            issue("time.dt", os.str());
        }

        // coefficient assumptions
        CoefficientSet coeffs = build_coefficients(cfg, grid);
        ValidationReport rep = validate_assumptions(coeffs);
        if (!rep.all_pass()) {
            for (const auto& e : rep.entries)
                if (!e.pass)
                    issue("coefficients", e.name + " fails (statistic " +
                                              std::to_string(e.statistic) + " vs bound " +
                                              std::to_string(e.bound) +
                                              (e.witness.empty() ? "" : ", " + e.witness) +
                                              ")");
        }

        if (cfg.paths < 1) issue("ensemble.paths", "need at least one path");
        if (!(cfg.psi_k > 0)) issue("output.psi_k", "must be positive");
        if (cfg.probes < 1) issue("output.probes", "need at least one probe point");
        for (double p : cfg.p_list)
            if (!(p >= 1)) issue("output.p_list", "entries must be >= 1");
    } catch (const std::exception& e) {
        issue("config", e.what());
    }
    return v;
}

std::string ConfigValidation::to_json() const {
    nlohmann::json j;
    j["check"] = "config";
    j["pass"] = ok();
    nlohmann::json items = nlohmann::json::array();
    for (const auto& i : issues) items.push_back({{"field", i.field}, {"message", i.message}});
    j["issues"] = items;
    return j.dump(2);
}

} // namespace spdelab
