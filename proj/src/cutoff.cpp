#include "spdelab/cutoff.hpp"

#include <algorithm>

namespace spdelab {

double cutoff_drift_peak(double m, double lambda) {
    if (!(m > 0) || !(lambda > 0))
        throw std::invalid_argument("cutoff_drift_peak: m, lambda must be positive");
    // v^lambda is increasing and h_m == 1 up to v = m; the peak sits in
    // [m, 2m]. Dense scan with one refinement pass is plenty for a bound
    // used with slack.
    const int coarse = 4096;
    double best_v = m, best = std::pow(m, lambda);
    for (int i = 0; i <= coarse; ++i) {
        const double v = m + m * double(i) / coarse;
        const double val = std::pow(v, lambda) * h_cutoff(v, m);
        if (val > best) { best = val; best_v = v; }
    }
    const double dv = m / coarse;
    for (int i = -8; i <= 8; ++i) {
        const double v = std::clamp(best_v + dv * double(i) / 8.0, m, 2 * m);
        best = std::max(best, std::pow(v, lambda) * h_cutoff(v, m));
    }
    return best;
}

} // namespace spdelab
