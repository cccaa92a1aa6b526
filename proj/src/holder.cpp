#include "spdelab/holder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

namespace {

constexpr std::size_t kMinSamplesPerLag = 32;
constexpr int kBootstrapRounds = 100;
constexpr std::size_t kBootstrapCap = 1024; // resample from a capped pool

double median_of(std::vector<double>& v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + long(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        auto lower = std::max_element(v.begin(), v.begin() + long(mid));
        m = 0.5 * (m + *lower);
    }
    return m;
}

struct FitResult {
    double slope = 0;
    double r2 = 1;
};

FitResult fit_loglog(const std::vector<double>& log_lag, const std::vector<double>& log_s) {
    const std::size_t n = log_lag.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += log_lag[i];
        my += log_s[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = log_lag[i] - mx;
        const double dy = log_s[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    FitResult out;
    out.slope = sxy / sxx;
    if (syy > 0) {
        const double ss_res = syy - sxy * sxy / sxx;
        out.r2 = 1.0 - ss_res / syy;
    }
    return out;
}

} // namespace

std::vector<std::size_t> dyadic_lags(std::size_t series_length, std::size_t min_samples,
                                     std::size_t max_count) {
    std::vector<std::size_t> lags;
    for (std::size_t lag = 1; lags.size() < max_count; lag *= 2) {
        if (series_length < lag + min_samples) break;
        lags.push_back(lag);
    }
    return lags;
}

StructureTable structure_function(std::span<const double> series,
                                  const std::vector<std::size_t>& lags) {
    StructureTable table;
    for (std::size_t lag : lags) {
        if (series.size() <= lag) continue;
        std::vector<double> inc;
        inc.reserve(series.size() - lag);
        for (std::size_t i = 0; i + lag < series.size(); ++i)
            inc.push_back(std::fabs(series[i + lag] - series[i]));
        table.lags.push_back(lag);
        table.counts.push_back(inc.size());
        table.median_increment.push_back(median_of(inc));
    }
    return table;
}

ExponentEstimate holder_exponent(std::span<const double> series,
                                 const std::vector<std::size_t>& lags,
                                 const std::string& direction) {
    if (lags.size() < 2)
        throw std::invalid_argument("holder_exponent: need at least 2 dyadic lags");

    // per-lag increment pools
    std::vector<std::vector<double>> pools;
    std::vector<std::size_t> used_lags;
    bool any_nonzero = false;
    for (std::size_t lag : lags) {
        if (series.size() < lag + kMinSamplesPerLag) continue;
        std::vector<double> inc;
        inc.reserve(series.size() - lag);
        for (std::size_t i = 0; i + lag < series.size(); ++i)
            inc.push_back(std::fabs(series[i + lag] - series[i]));
        for (double v : inc)
            if (v != 0.0) { any_nonzero = true; break; }
        pools.push_back(std::move(inc));
        used_lags.push_back(lag);
    }
    if (!any_nonzero)
        throw std::invalid_argument("holder_exponent: constant series (all increments zero)");

    std::vector<double> log_lag, log_s;
    std::vector<std::vector<double>> kept_pools;
    std::vector<std::size_t> kept_lags;
    for (std::size_t j = 0; j < pools.size(); ++j) {
        std::vector<double> copy = pools[j];
        const double med = median_of(copy);
        if (med <= 0.0) continue; // quantized-flat lag carries no slope information
        log_lag.push_back(std::log(double(used_lags[j])));
        log_s.push_back(std::log(med));
        kept_pools.push_back(std::move(pools[j]));
        kept_lags.push_back(used_lags[j]);
    }
    if (log_lag.size() < 2)
        throw std::invalid_argument("holder_exponent: fewer than 2 usable lags");

    const FitResult fit = fit_loglog(log_lag, log_s);

    // bootstrap over increment resampling; pools are capped so wide series
    // do not dominate the runtime
    RngStream rng(0x5117bee7u);
    std::vector<double> slopes;
    slopes.reserve(kBootstrapRounds);
    std::vector<double> resample;
    for (int round = 0; round < kBootstrapRounds; ++round) {
        std::vector<double> ys;
        ys.reserve(kept_pools.size());
        bool ok = true;
        for (const auto& pool : kept_pools) {
            const std::size_t m = std::min(pool.size(), kBootstrapCap);
            resample.clear();
            resample.reserve(m);
            for (std::size_t i = 0; i < m; ++i)
                resample.push_back(pool[std::size_t(rng.next_u64() % pool.size())]);
            const double med = median_of(resample);
            if (med <= 0.0) { ok = false; break; }
            ys.push_back(std::log(med));
        }
        if (!ok) continue;
        slopes.push_back(fit_loglog(log_lag, ys).slope);
    }
    double half_width = 1e-6;
    if (slopes.size() > 8) {
        double mean = 0;
        for (double s : slopes) mean += s;
        mean /= double(slopes.size());
        double var = 0;
        for (double s : slopes) var += (s - mean) * (s - mean);
        var /= double(slopes.size() - 1);
        half_width = std::max(1.96 * std::sqrt(var), 1e-6);
    }

    ExponentEstimate est;
    est.direction = direction;
    est.estimate = std::clamp(fit.slope, 0.0, 1.05);
    est.half_width = half_width;
    est.r2 = fit.r2;
    est.lags_used = kept_lags;
    return est;
}

std::string ExponentEstimate::to_json() const {
    nlohmann::json j;
    j["check"] = "holder_exponent";
    j["parameters"] = {{"direction", direction}, {"lags", lags_used}};
    j["statistic"] = estimate;
    j["half_width"] = half_width;
    j["r2"] = r2;
    return j.dump(2);
}

} // namespace spdelab
