#include "spdelab/noise.hpp"

#include <algorithm>

#include "json.hpp"
#include "spdelab/cutoff.hpp"

namespace spdelab {

double NoiseModel::channel_sum_statistic() const {
    if (mu.empty()) return 0.0;
    if (regime == NoiseRegime::Lipschitz) {
        double s = 0;
        for (const auto& f : mu) {
            const double m = f.max_abs();
            s += m * m;
        }
        return s; // compare against K^2
    }
    // super-linear: pointwise channel sum, sup over the grid
    double worst = 0;
    const std::size_t sz = mu[0].size();
    for (std::size_t p = 0; p < sz; ++p) {
        double s = 0;
        for (const auto& f : mu) s += f.values[p] * f.values[p];
        worst = std::max(worst, s);
    }
    return worst; // compare against K
}

bool NoiseModel::channel_sum_ok(double tol) const {
    const double stat = channel_sum_statistic();
    const double bound = regime == NoiseRegime::Lipschitz ? K * K : K;
    return stat <= bound + tol;
}

std::vector<double> wiener_increments(RngStream& rng, int channels, double dt) {
    if (channels < 0) throw std::invalid_argument("wiener_increments: channels < 0");
    if (!(dt > 0)) throw std::invalid_argument("wiener_increments: dt must be positive");
    std::vector<double> out(channels);
    const double s = std::sqrt(dt);
    for (int k = 0; k + 1 < channels; k += 2) {
        double g0, g1;
        rng.next_gaussian_pair(g0, g1);
        out[k] = s * g0;
        out[k + 1] = s * g1;
    }
    if (channels % 2 == 1) out[channels - 1] = s * rng.next_gaussian();
    return out;
}

Field diffusion_apply(const NoiseModel& model, const Field& u, const std::vector<double>& dW,
                      double taming_m) {
    if (int(dW.size()) != model.channels)
        throw std::invalid_argument("diffusion_apply: dW length != channel count");
    Field out(u.grid);
    if (model.channels == 0) return out;
    require_same_grid(u, model.mu[0], "diffusion_apply");

    // sum_k mu^k(x) dW^k first; the u-dependence factors out per regime.
    Field kick(u.grid);
    for (int k = 0; k < model.channels; ++k) {
        const double w = dW[k];
        const Field& m = model.mu[k];
        for (std::size_t p = 0; p < kick.size(); ++p) kick.values[p] += m.values[p] * w;
    }

    if (model.regime == NoiseRegime::Lipschitz) {
        for (std::size_t p = 0; p < out.size(); ++p)
            out.values[p] = kick.values[p] * u.values[p];
        return out;
    }
    const double q = 1.0 + model.lambda0;
    if (taming_m > 0) {
        for (std::size_t p = 0; p < out.size(); ++p) {
            const double v = u.values[p];
            const double vp = v > 0 ? v : 0.0;
            out.values[p] = kick.values[p] * std::pow(vp, q) * h_cutoff(v, taming_m);
        }
    } else {
        for (std::size_t p = 0; p < out.size(); ++p)
            out.values[p] = kick.values[p] * std::pow(std::fabs(u.values[p]), q);
    }
    return out;
}

ProbeReport lipschitz_probe(const NoiseModel& model, int samples, RngStream& rng) {
    if (model.regime != NoiseRegime::Lipschitz)
        throw std::invalid_argument("lipschitz_probe: model is not in the Lipschitz regime");
    ProbeReport rep;
    rep.bound = model.K;
    rep.samples = std::size_t(std::max(samples, 0));
    const std::size_t sz = model.mu.empty() ? 0 : model.mu[0].size();
    for (int s = 0; s < samples; ++s) {
        const std::size_t p = sz ? std::size_t(rng.next_u64() % sz) : 0;
        const double u = 8.0 * (rng.next_uniform() - 0.5);
        double v = 8.0 * (rng.next_uniform() - 0.5);
        if (v == u) v += 1.0;
        double s2 = 0;
        for (const auto& f : model.mu) {
            const double m = sz ? f.values[p] : 0.0;
            s2 += m * m;
        }
        const double l2 = std::sqrt(s2); // |sigma(u)-sigma(v)|_l2 = l2 |u-v| for linear sigma
        rep.max_ratio = std::max(rep.max_ratio, l2);
        rep.max_growth = std::max(rep.max_growth, l2);
    }
    rep.pass = rep.max_ratio <= model.K + 1e-12 && rep.max_growth <= model.K + 1e-12;
    return rep;
}

NoiseModel make_noise_model(const GridSpec& grid, NoiseRegime regime, int channels,
                            const std::string& mu_preset, double scale, double lambda0,
                            double K) {
    if (channels < 0) throw std::invalid_argument("make_noise_model: channels < 0");
    NoiseModel model;
    model.regime = regime;
    model.channels = channels;
    model.lambda0 = lambda0;
    model.K = K;

    std::string kind = mu_preset;
    double ratio = 0.5;
    if (auto pos = mu_preset.find(':'); pos != std::string::npos) {
        kind = mu_preset.substr(0, pos);
        ratio = std::stod(mu_preset.substr(pos + 1));
    }
    if (channels == 0) return model;
    if (!(ratio > 0 && ratio < 1))
        throw std::invalid_argument("make_noise_model: decay ratio must be in (0,1)");

    // Normalize against the infinite sum so the truncation level K_ch does
    // not rescale leading channels: sum_k (c r^(k-1))^2 = c^2/(1-r^2).
    const double budget = regime == NoiseRegime::Lipschitz ? scale * scale : scale;
    const double c0 = std::sqrt(budget * (1.0 - ratio * ratio));

    for (int k = 0; k < channels; ++k) {
        const double amp = c0 * std::pow(ratio, k);
        if (kind == "geometric") {
            model.mu.emplace_back(grid, amp);
        } else if (kind == "modal") {
            // Alternating cos/sin low modes along x^1; |profile| <= 1 keeps
            // the channel sums within budget.
            const int mode = k / 2 + 1;
            const bool use_sin = (k % 2) == 1;
            const double w = M_PI * mode / grid.half_length;
            model.mu.push_back(Field::sample(grid, [amp, w, use_sin](double x, double) {
                return amp * (use_sin ? std::sin(w * x) : std::cos(w * x));
            }));
        } else {
            throw std::invalid_argument("make_noise_model: unknown mu preset '" + kind + "'");
        }
    }
    return model;
}

std::string ProbeReport::to_json() const {
    nlohmann::json j;
    j["check"] = "lipschitz_probe";
    j["pass"] = pass;
    j["parameters"] = {{"samples", samples}};
    j["statistic"] = max_ratio;
    j["bound"] = bound;
    j["margin"] = bound - max_ratio;
    j["max_growth_ratio"] = max_growth;
    return j.dump(2);
}

} // namespace spdelab
