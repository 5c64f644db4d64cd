#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "sievepi/fitted_function.hpp"
#include "sievepi/sample.hpp"

namespace sievepi {

enum class SummaryKind {
    MomentKappa,         // Psi(theta) = P0 theta^kappa
    SmoothMoment,        // Psi(theta) = P0 (f o theta), f' supplied
    MeanCounterfactual,  // Psi(theta) = P0 theta(1, .)  (G-computation)
    HteVariance,         // Psi(theta) = Var(mu1 - mu0)
    AverageDerivative,   // Psi(theta) = P0 theta', via a known density score
};

std::string summary_kind_name(SummaryKind kind);

/// Summary functional descriptor. f/f' are paired callables (no symbolic
/// differentiation); the density score p0'/p0 for AverageDerivative must be
/// supplied analytically (by the DGP).
struct Summary {
    SummaryKind kind = SummaryKind::MomentKappa;
    double kappa = 2.0;
    std::function<double(double)> f;
    std::function<double(double)> f_prime;
    std::function<double(double)> density_score;

    static Summary moment(double kappa);
    static Summary smooth(std::function<double(double)> f, std::function<double(double)> f_prime);
    static Summary mean_counterfactual();
    static Summary hte_variance();
    static Summary average_derivative(std::function<double(double)> density_score);

    bool needs_propensity() const {
        return kind == SummaryKind::MeanCounterfactual || kind == SummaryKind::HteVariance;
    }
    bool needs_density_score() const { return kind == SummaryKind::AverageDerivative; }
    int required_arity() const { return needs_propensity() ? 2 : 1; }
};

enum class EstimatorKind { PlugIn, OneStep };

struct EstimateReport {
    double psi_hat = 0.0;
    Eigen::VectorXd if_values;
    double se = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    EstimatorKind estimator_kind = EstimatorKind::PlugIn;
    double if_mean = 0.0;  // ~0 for OneStep by construction
    bool degenerate_ci = false;
    int truncated_propensities = 0;  // positivity guard hits (delta = 0.01)
    std::string provenance;

    static std::string csv_header();
    std::string csv_row(const std::string& summary_name, Eigen::Index n,
                        std::uint64_t seed) const;
};

/// 95% Wald interval psi_hat +/- 1.959964 * sqrt(mean(if^2)/n). Zero variance
/// yields the degenerate interval (psi_hat, psi_hat) with the flag set.
std::pair<double, double> wald_ci(double psi_hat, const Eigen::VectorXd& if_values,
                                  bool* degenerate = nullptr);

/// Propensity values are truncated to [0.01, 0.99]; the count of truncations
/// is reported on the EstimateReport.
EstimateReport plug_in(const Summary& summary, const FittedFunction& fit, const Sample& s,
                       FittedFunctionPtr propensity = nullptr);
EstimateReport one_step(const Summary& summary, const FittedFunction& fit, const Sample& s,
                        FittedFunctionPtr propensity = nullptr);

}  // namespace sievepi
