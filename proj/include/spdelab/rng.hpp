// Counter-based random stream: output i of stream (seed) is a pure function
// of (seed, i), so identical (seed, counter) replays identical sequences
// bit-for-bit and per-path substreams need no coordination.
#pragma once

#include <cmath>
#include <cstdint>

namespace spdelab {

namespace detail {

// splitmix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    explicit RngStream(std::uint64_t seed_ = 0) : seed(seed_) {}

    static RngStream for_path(std::uint64_t master_seed, std::uint64_t path_index) {
        return RngStream(detail::mix64(master_seed ^
                                       detail::mix64(path_index + 0x6a09e667f3bcc909ULL)));
    }

    std::uint64_t next_u64() {
        return detail::mix64(seed ^ (0x9e3779b97f4a7c15ULL * ++counter));
    }

    // Uniform in (0, 1]; never 0, safe under log().
    double next_uniform() {
        return double((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Box-Muller pair; consumes exactly two uniforms.
    void next_gaussian_pair(double& g0, double& g1) {
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        g0 = r * std::cos(2.0 * M_PI * u2);
        g1 = r * std::sin(2.0 * M_PI * u2);
    }

    double next_gaussian() {
        double a, b;
        next_gaussian_pair(a, b);
        return a;
    }
};

} // namespace spdelab
