#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sievepi/dgp.hpp"
#include "sievepi/summaries.hpp"

namespace sievepi {

struct McConfig {
    DgpKind dgp = DgpKind::StepTrig;
    std::vector<Eigen::Index> n_grid;
    int replicates = 200;
    std::vector<std::string> roster;  // see estimator_roster_for
    std::uint64_t base_seed = 1;
    // 1% symmetric trimming of the estimate distribution before MSE/bias
    // (coverage is never trimmed). Off by default; on for the HteStep tables.
    bool trim = false;
    // >= 0 forces this K for the *.trig estimators instead of CV (K-sweep
    // experiments); -1 selects K by CV.
    int fixed_K = -1;
    // Use the DGP's true propensity in influence functions instead of a
    // logistic-boosting estimate.
    bool use_true_propensity = false;
    double failure_cap = 0.05;  // abort above this failure fraction
};

struct McCell {
    std::string estimator;
    Eigen::Index n = 0;
    int replicates_done = 0;
    int failures = 0;
    double relative_mse = 0.0;   // n * MSE / xi2
    double rel_abs_bias = 0.0;   // sqrt(n) * |bias / psi|
    double coverage = 0.0;
    double coverage_mc_se = 0.0;  // sqrt(p(1-p)/R)
    bool trimmed = false;
    std::vector<double> estimates;        // per replicate, replicate order
    std::vector<double> selected_bounds;  // HAL: selected M per replicate
};

struct McResult {
    DgpKind dgp = DgpKind::StepTrig;
    double psi_true = 0.0;
    double xi2_true = 0.0;
    std::vector<McCell> cells;

    static std::string csv_header();
    std::string csv() const;
};

/// Estimator names runnable on each DGP family:
///   HAL (HalExp):      "M.cv", "M.gcv", "M.gcv+", "M.oracle"
///   scalar series:     "poly", "xgb", "xgb.1step", "xgb.trig", "ker.trig"
///   treatment series:  the same names, fit per arm with the tensor series
std::vector<std::string> estimator_roster_for(DgpKind kind);

/// One estimator on one sample; exposed for the CLI's single-shot estimate
/// path. selected_bound (optional) receives the HAL bound where applicable.
EstimateReport run_estimator(const std::string& name, const Dgp& dgp, const Sample& s,
                             std::uint64_t seed, const McConfig& cfg,
                             double* selected_bound = nullptr);

using McProgress = std::function<void(const std::string&)>;

/// Replicate r of any cell uses seed base_seed + r for data generation (a
/// fixed offset stream derives the estimators' internal seeds), so identical
/// configs are bit-identical. Throws NumericError if more than failure_cap
/// of a cell's replicates fail.
McResult run_monte_carlo(const McConfig& cfg, const McProgress& progress = {});

}  // namespace sievepi
