// Multi-channel time-white noise: finitely many independent scalar Wiener
// increments per step, each paired with a smooth spatial multiplier field.
//
// Lipschitz regime:    sigma^k(x, u) = mu^k(x) * u
// Super-linear regime: sigma^k(x, u) = mu^k(x) * |u|^(1+lambda0), evaluated
//                      in taming mode as mu^k(x) * u_+^(1+lambda0) * h_m(u).
#pragma once

#include <string>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

enum class NoiseRegime { Lipschitz, SuperLinear };

struct NoiseModel {
    NoiseRegime regime = NoiseRegime::Lipschitz;
    int channels = 0;
    std::vector<Field> mu; // one multiplier field per channel
    double lambda0 = 0.5;  // super-linear exponent
    double K = 1.0;        // assumption constant the channel sums must respect

    // Lipschitz: sum_k sup_x |mu^k|^2 <= K^2. Super-linear: sup_x sum_k
    // |mu^k(x)|^2 <= K.
    double channel_sum_statistic() const;
    bool channel_sum_ok(double tol = 1e-12) const;
};

// channels independent N(0, dt) samples; advances the stream by a fixed
// number of draws regardless of the values produced.
std::vector<double> wiener_increments(RngStream& rng, int channels, double dt);

// sum_k sigma^k(x, u(x)) dW^k. taming_m > 0 selects the tamed super-linear
// form u_+^(1+lambda0) h_m(u); taming_m == 0 is the raw |u|^(1+lambda0).
// The Lipschitz form mu^k u is unaffected by taming_m.
Field diffusion_apply(const NoiseModel& model, const Field& u, const std::vector<double>& dW,
                      double taming_m = 0.0);

struct ProbeReport {
    bool pass = false;
    double max_ratio = 0;      // max |sigma(u)-sigma(v)|_l2 / |u-v| over samples
    double max_growth = 0;     // max |sigma(u)|_l2 / |u|
    double bound = 0;          // K
    std::size_t samples = 0;
    std::string to_json() const;
};

// Random (x, u, v) probes of the Lipschitz and linear-growth constants.
// Errors on super-linear models.
ProbeReport lipschitz_probe(const NoiseModel& model, int samples, RngStream& rng);

// Preset multiplier families. Amplitudes decay geometrically with ratio r and
// are normalized against the infinite channel sum, so truncation level never
// rescales the leading channels:
//   "geometric:r"  constant-in-x channels
//   "modal:r"      channel k modulated by the k-th low Fourier mode in x^1
// scale sets the infinite-sum budget: Lipschitz sum_k sup|mu^k|^2 = scale^2,
// super-linear sum_k |mu^k(x)|^2 <= scale.
NoiseModel make_noise_model(const GridSpec& grid, NoiseRegime regime, int channels,
                            const std::string& mu_preset, double scale, double lambda0,
                            double K);

} // namespace spdelab
