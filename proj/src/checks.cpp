#include "spdelab/checks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "spdelab/coefficients.hpp"

namespace spdelab {

namespace {

double median_value(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + long(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        auto lower = std::max_element(v.begin(), v.begin() + long(mid));
        m = 0.5 * (m + *lower);
    }
    return m;
}

} // namespace

MartingaleReport martingale_check(const std::vector<PathRecord>& records, double K, double k,
                                  double lambda, std::size_t min_paths) {
    if (records.size() < min_paths)
        throw std::invalid_argument("martingale_check: ensemble smaller than " +
                                    std::to_string(min_paths));
    MartingaleReport rep;
    rep.K = K;
    rep.psi_k = k;

    std::vector<const PathRecord*> usable;
    for (const auto& r : records) {
        if (r.psi_l1_series.empty())
            throw std::invalid_argument("martingale_check: weighted-mass series missing");
        if (r.termination == Termination::Completed)
            usable.push_back(&r);
        else
            ++rep.paths_skipped;
    }
    if (usable.size() < 2)
        throw std::invalid_argument("martingale_check: too few completed paths");
    rep.paths_used = usable.size();

    const std::size_t steps = usable.front()->psi_l1_series.size();
    const double dt = usable.front()->dt;
    rep.times.resize(steps);
    rep.mean_curve.assign(steps, 0.0);
    rep.se_curve.assign(steps, 0.0);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = double(i) * dt;
        rep.times[i] = t;
        const double discount = std::exp(-4.0 * K * t);
        double sum = 0, sum2 = 0;
        for (const auto* r : usable) {
            const double m = discount * r->psi_l1_series[i];
            sum += m;
            sum2 += m * m;
        }
        const double n = double(usable.size());
        const double mean = sum / n;
        const double var = std::max(sum2 / n - mean * mean, 0.0);
        rep.mean_curve[i] = mean;
        rep.se_curve[i] = std::sqrt(var / n);
    }

    const double slack = 1e-12 * std::max(rep.mean_curve[0], 1e-300);
    rep.supermartingale_pass = true;
    for (std::size_t i = 1; i < steps; ++i) {
        const double allowance = 2.0 * rep.se_curve[i] + slack;
        if (rep.mean_curve[i] > rep.mean_curve[0] + allowance ||
            rep.mean_curve[i] > rep.mean_curve[i - 1] + allowance) {
            rep.supermartingale_pass = false;
            break;
        }
    }

    // sup bound with the constant 3 e^{2KT} against the initial mass
    double sup_stat = 0, base_stat = 0;
    for (const auto* r : usable) {
        double s = 0;
        for (double v : r->l1_series) s = std::max(s, v);
        sup_stat += std::sqrt(s);
        base_stat += std::sqrt(r->l1_series[0]);
    }
    sup_stat /= double(usable.size());
    base_stat /= double(usable.size());
    const double T = usable.front()->t_final;
    rep.sup_statistic = sup_stat;
    rep.sup_bound = 3.0 * std::exp(2.0 * K * T) * base_stat;
    rep.sup_margin = rep.sup_bound > 0 ? (rep.sup_bound - rep.sup_statistic) / rep.sup_bound
                                       : (rep.sup_statistic == 0 ? 1.0 : -1.0);
    rep.sup_bound_pass = rep.sup_statistic <= rep.sup_bound + slack;

    double max_level = 0;
    for (const auto& r : records)
        for (const auto& e : r.events) max_level = std::max(max_level, e.m_after);
    for (const auto* r : usable)
        if (r->events.empty()) max_level = std::max(max_level, 0.0);
    rep.max_level_seen = max_level;
    rep.threshold_k_for_level =
        max_level > 0 ? psi_bracket_threshold(max_level, lambda) : 0.0;

    rep.pass = rep.supermartingale_pass && rep.sup_bound_pass;
    return rep;
}

MomentReport lq_moment_check(const std::vector<PathRecord>& records, double q,
                             double u0_stat) {
    if (records.empty()) throw std::invalid_argument("lq_moment_check: empty ensemble");
    MomentReport rep;
    rep.q = q;

    std::size_t q_index = records.front().p_list.size();
    double p_run = 0;
    for (std::size_t j = 0; j < records.front().p_list.size(); ++j) {
        const double p = records.front().p_list[j];
        if (p == q) q_index = j;
        p_run = p_run == 0 ? p : std::min(p_run, p);
    }
    if (q_index == records.front().p_list.size())
        throw std::invalid_argument("lq_moment_check: q-series not recorded");
    if (!(q > p_run))
        throw std::invalid_argument("lq_moment_check: q must exceed the run's p");

    double stat = 0, base = 0;
    std::size_t used = 0;
    for (const auto& r : records) {
        if (r.termination != Termination::Completed) continue;
        const auto& series = r.lp_series[q_index];
        double integral = 0;
        for (std::size_t i = 0; i + 1 < series.size(); ++i) {
            const double a = std::pow(series[i], q);
            const double b = std::pow(series[i + 1], q);
            integral += 0.5 * (a + b) * r.dt;
        }
        stat += integral;
        base += std::pow(series[0], q);
        ++used;
    }
    if (used == 0) throw std::invalid_argument("lq_moment_check: no completed paths");
    rep.statistic = stat / double(used);
    rep.u0_stat = u0_stat > 0 ? u0_stat : base / double(used);
    rep.paths_used = used;
    rep.n_hat = rep.u0_stat > 0 ? rep.statistic / rep.u0_stat : 0.0;
    rep.pass = std::isfinite(rep.statistic) &&
               (rep.u0_stat > 0 ? std::isfinite(rep.n_hat) : rep.statistic == 0.0);
    return rep;
}

ConsistencyReport embedding_consistency(const ExponentEstimate& time_est,
                                        const ExponentEstimate& space_est, double p,
                                        double kappa, int d) {
    ConsistencyReport rep;
    rep.time_estimate = time_est.estimate;
    rep.space_estimate = space_est.estimate;
    // best exponents reachable under 1/p < alpha < beta < (1-kappa-d/p)/2:
    // time alpha - 1/p with alpha at the top, space 1-kappa-2 beta-d/p with
    // beta at the bottom
    rep.time_guarantee = 0.5 * (1.0 - kappa - double(d) / p) - 1.0 / p;
    rep.space_guarantee = 1.0 - kappa - (double(d) + 2.0) / p;
    rep.time_margin = rep.time_estimate - (rep.time_guarantee - rep.delta);
    rep.space_margin = rep.space_estimate - (rep.space_guarantee - rep.delta);
    rep.pass = rep.time_margin >= 0 && rep.space_margin >= 0;
    return rep;
}

AggregatedExponent aggregate_exponents(const std::vector<std::vector<double>>& series_set,
                                       const std::vector<std::size_t>& lags,
                                       const std::string& direction) {
    AggregatedExponent out;
    std::vector<double> estimates, widths, r2s;
    std::vector<std::vector<double>> per_lag_medians(lags.size());
    for (const auto& series : series_set) {
        try {
            ExponentEstimate e = holder_exponent(series, lags, direction);
            estimates.push_back(e.estimate);
            widths.push_back(e.half_width);
            r2s.push_back(e.r2);
        } catch (const std::invalid_argument&) {
            ++out.series_skipped;
            continue;
        }
        StructureTable t = structure_function(series, lags);
        for (std::size_t j = 0; j < t.lags.size(); ++j) {
            auto it = std::find(lags.begin(), lags.end(), t.lags[j]);
            per_lag_medians[std::size_t(it - lags.begin())].push_back(
                t.median_increment[j]);
        }
        ++out.series_used;
    }
    if (estimates.empty())
        throw std::invalid_argument("aggregate_exponents: no usable series");
    out.aggregate.direction = direction;
    out.aggregate.estimate = median_value(estimates);
    out.aggregate.half_width = median_value(widths);
    out.aggregate.r2 = median_value(r2s);
    out.aggregate.lags_used = lags;
    for (std::size_t j = 0; j < lags.size(); ++j) {
        if (per_lag_medians[j].empty()) continue;
        out.table.lags.push_back(lags[j]);
        out.table.median_increment.push_back(median_value(per_lag_medians[j]));
        out.table.counts.push_back(per_lag_medians[j].size());
    }
    return out;
}

std::vector<std::vector<double>> time_series_for_estimation(
    const std::vector<PathRecord>& records) {
    std::vector<std::vector<double>> out;
    for (const auto& r : records) {
        if (r.termination != Termination::Completed) continue;
        for (const auto& probe : r.probe_series) out.push_back(probe);
    }
    return out;
}

std::vector<std::vector<double>> space_series_for_estimation(
    const std::vector<PathRecord>& records) {
    std::vector<std::vector<double>> out;
    for (const auto& r : records) {
        if (r.termination != Termination::Completed) continue;
        for (const auto& snap : r.snapshots) {
            if (snap.step == 0) continue; // skip the initial data
            if (r.dim == 1) {
                out.push_back(snap.values);
            } else {
                // a handful of rows and columns per snapshot
                const std::size_t n = r.n;
                for (std::size_t j = 0; j < n; j += n / 4) {
                    std::vector<double> row(n), col(n);
                    for (std::size_t i = 0; i < n; ++i) {
                        row[i] = snap.values[j * n + i];
                        col[i] = snap.values[i * n + j];
                    }
                    out.push_back(std::move(row));
                    out.push_back(std::move(col));
                }
            }
        }
    }
    return out;
}

std::string MartingaleReport::to_json() const {
    nlohmann::json j;
    j["check"] = "martingale";
    j["pass"] = pass;
    j["parameters"] = {{"K", K}, {"psi_k", psi_k}, {"paths", paths_used}};
    j["supermartingale_pass"] = supermartingale_pass;
    j["sup_bound_pass"] = sup_bound_pass;
    j["statistic"] = sup_statistic;
    j["bound"] = sup_bound;
    j["margin"] = sup_margin;
    j["max_level_seen"] = max_level_seen;
    j["threshold_k_for_level"] = threshold_k_for_level;
    j["curve"] = {{"t", times}, {"mean", mean_curve}, {"se", se_curve}};
    return j.dump(2);
}

std::string MomentReport::to_json() const {
    nlohmann::json j;
    j["check"] = "moment";
    j["pass"] = pass;
    j["parameters"] = {{"q", q}, {"paths", paths_used}};
    j["statistic"] = statistic;
    j["bound"] = u0_stat;
    j["margin"] = n_hat;
    j["n_hat"] = n_hat;
    return j.dump(2);
}

std::string ConsistencyReport::to_json() const {
    nlohmann::json j;
    j["check"] = "embedding";
    j["pass"] = pass;
    j["parameters"] = {{"delta", delta}};
    j["statistic"] = {{"time", time_estimate}, {"space", space_estimate}};
    j["bound"] = {{"time", time_guarantee}, {"space", space_guarantee}};
    j["margin"] = {{"time", time_margin}, {"space", space_margin}};
    return j.dump(2);
}

} // namespace spdelab
