// Ensemble-level statistical checks over recorded paths: the discounted
// weighted-mass supermartingale test, the L_q moment constant, and the
// exponent/embedding consistency comparison.
#pragma once

#include <string>
#include <vector>

#include "spdelab/holder.hpp"
#include "spdelab/record.hpp"

namespace spdelab {

struct MartingaleReport {
    bool pass = false;
    bool supermartingale_pass = false; // mean M_t <= mean M_0 + 2 SE, and
                                       // consecutive means nonincreasing within 2 SE
    bool sup_bound_pass = false;       // mean sup_t |u|_L1^(1/2) <= 3 e^(2KT) mean |u0|_L1^(1/2)
    double K = 0;
    double psi_k = 0;
    std::size_t paths_used = 0;
    std::size_t paths_skipped = 0; // terminated paths excluded from the mean curve
    std::vector<double> times;
    std::vector<double> mean_curve; // mean of e^(-4Kt) * weighted mass
    std::vector<double> se_curve;
    double sup_statistic = 0;
    double sup_bound = 0;
    double sup_margin = 0; // relative: (bound - statistic) / bound
    double max_level_seen = 0;
    double threshold_k_for_level = 0; // weight inequality threshold at that level
    std::string to_json() const;
};

MartingaleReport martingale_check(const std::vector<PathRecord>& records, double K, double k,
                                  double lambda, std::size_t min_paths = 100);

struct MomentReport {
    bool pass = false; // statistic finite with nonzero initial mass
    double q = 0;
    double statistic = 0; // mean over paths of int_0^T |u(t)|_Lq^q dt
    double u0_stat = 0;   // mean over paths of |u0|_Lq^q
    double n_hat = 0;     // implied constant statistic / u0_stat
    std::size_t paths_used = 0;
    std::string to_json() const;
};

// u0_stat <= 0 means: estimate it from the records.
MomentReport lq_moment_check(const std::vector<PathRecord>& records, double q,
                             double u0_stat = 0);

struct ConsistencyReport {
    bool pass = false;
    double time_estimate = 0;
    double space_estimate = 0;
    double time_guarantee = 0;  // (1 - kappa - d/p)/2 - 1/p
    double space_guarantee = 0; // 1 - kappa - (d+2)/p
    double delta = 0.1;         // one-sided tolerance
    double time_margin = 0;
    double space_margin = 0;
    std::string to_json() const;
};

ConsistencyReport embedding_consistency(const ExponentEstimate& time_est,
                                        const ExponentEstimate& space_est, double p,
                                        double kappa, int d);

// Median-aggregated exponent over many series plus the pooled table.
struct AggregatedExponent {
    ExponentEstimate aggregate;           // medians of per-series estimates
    StructureTable table;                 // per-lag medians across series
    std::size_t series_used = 0;
    std::size_t series_skipped = 0;       // degenerate series
};

AggregatedExponent aggregate_exponents(const std::vector<std::vector<double>>& series_set,
                                       const std::vector<std::size_t>& lags,
                                       const std::string& direction);

// Series extraction from records: probe series for the time direction,
// snapshot grid lines for the space direction.
std::vector<std::vector<double>> time_series_for_estimation(
    const std::vector<PathRecord>& records);
std::vector<std::vector<double>> space_series_for_estimation(
    const std::vector<PathRecord>& records);

} // namespace spdelab
