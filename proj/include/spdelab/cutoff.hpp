// C^1 taming factor: 1 on |z| <= m, 0 on |z| >= 2m, cubic smoothstep between.
#pragma once

#include <cmath>
#include <stdexcept>

namespace spdelab {

inline double h_cutoff(double z, double m) {
    if (!(m > 0)) throw std::invalid_argument("h_cutoff: m must be positive");
    const double az = std::fabs(z);
    if (az <= m) return 1.0;
    if (az >= 2.0 * m) return 0.0;
    const double s = az / m - 1.0;
    return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

// max over v in [0, 2m] of v^lambda * h_cutoff(v, m); the taming makes this
// finite, slightly above m^lambda, and always <= (2m)^lambda.
double cutoff_drift_peak(double m, double lambda);

} // namespace spdelab
