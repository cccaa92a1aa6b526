// Hoelder exponent estimation by median structure functions: the median
// absolute increment at dyadic lags, fitted in log-log by least squares.
// Medians resist the heavy tails near pasting events; the confidence
// half-width comes from bootstrap resampling of the per-lag increments.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spdelab {

struct ExponentEstimate {
    std::string direction; // "time" or "space"
    double estimate = 0;   // log-log slope, clipped to [0, 1.05]
    double half_width = 0; // bootstrap confidence half-width, > 0
    double r2 = 0;
    std::vector<std::size_t> lags_used;
    std::string to_json() const;
};

struct StructureTable {
    std::vector<std::size_t> lags;
    std::vector<double> median_increment;
    std::vector<std::size_t> counts;
};

// Dyadic lags 1, 2, 4, ... such that each lag keeps at least min_samples
// increments, capped at max_count entries.
std::vector<std::size_t> dyadic_lags(std::size_t series_length, std::size_t min_samples = 32,
                                     std::size_t max_count = 16);

StructureTable structure_function(std::span<const double> series,
                                  const std::vector<std::size_t>& lags);

// Requires >= 2 usable lags with >= 32 increments each; a constant series
// (all increments zero) is a degenerate-input error.
ExponentEstimate holder_exponent(std::span<const double> series,
                                 const std::vector<std::size_t>& lags,
                                 const std::string& direction = "time");

} // namespace spdelab
