#include "sievepi/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "sievepi/errors.hpp"

namespace sievepi {

namespace {

constexpr double kZ975 = 1.959964;
constexpr double kPropensityDelta = 0.01;

}  // namespace

std::string summary_kind_name(SummaryKind kind) {
    switch (kind) {
        case SummaryKind::MomentKappa:
            return "moment_kappa";
        case SummaryKind::SmoothMoment:
            return "smooth_moment";
        case SummaryKind::MeanCounterfactual:
            return "mean_counterfactual";
        case SummaryKind::HteVariance:
            return "hte_variance";
        case SummaryKind::AverageDerivative:
            return "average_derivative";
    }
    throw ConfigError("unknown summary kind");
}

Summary Summary::moment(double kappa) {
    Summary out;
    out.kind = SummaryKind::MomentKappa;
    out.kappa = kappa;
    out.f = [kappa](double t) { return std::pow(t, kappa); };
    out.f_prime = [kappa](double t) { return kappa * std::pow(t, kappa - 1.0); };
    return out;
}

Summary Summary::smooth(std::function<double(double)> f, std::function<double(double)> f_prime) {
    Summary out;
    out.kind = SummaryKind::SmoothMoment;
    out.f = std::move(f);
    out.f_prime = std::move(f_prime);
    return out;
}

Summary Summary::mean_counterfactual() {
    Summary out;
    out.kind = SummaryKind::MeanCounterfactual;
    return out;
}

Summary Summary::hte_variance() {
    Summary out;
    out.kind = SummaryKind::HteVariance;
    return out;
}

Summary Summary::average_derivative(std::function<double(double)> density_score) {
    Summary out;
    out.kind = SummaryKind::AverageDerivative;
    out.density_score = std::move(density_score);
    return out;
}

std::pair<double, double> wald_ci(double psi_hat, const Eigen::VectorXd& if_values,
                                  bool* degenerate) {
    const auto n = if_values.size();
    if (n < 2) throw ConfigError("Wald interval needs n >= 2");
    if (!if_values.allFinite()) throw NumericError("influence values are not finite");
    const double se = std::sqrt(if_values.squaredNorm() / static_cast<double>(n) /
                                static_cast<double>(n));
    if (degenerate) *degenerate = se == 0.0;
    return {psi_hat - kZ975 * se, psi_hat + kZ975 * se};
}

namespace {

// Every summary splits as Psi-hat-parts: a "plug" term whose sample mean is
// the plug-in estimate and a "loss" term that debiases it. The influence
// function of either estimator is loss + plug - psi_hat; the one-step takes
// psi_hat = mean(loss + plug), which zeroes the empirical mean exactly.
struct IfParts {
    Eigen::VectorXd loss_part;
    Eigen::VectorXd plug_part;
    int truncated = 0;
};

IfParts compute_parts(const Summary& summary, const FittedFunction& fit, const Sample& s,
                      const FittedFunctionPtr& propensity) {
    s.validate();
    if (fit.arity() < summary.required_arity())
        throw ConfigError(summary_kind_name(summary.kind) + " needs a fit of arity " +
                          std::to_string(summary.required_arity()));
    if (summary.needs_propensity()) {
        if (!propensity)
            throw ConfigError(summary_kind_name(summary.kind) + " requires a propensity fit");
        if (!s.a) throw ConfigError(summary_kind_name(summary.kind) +
                                    " requires a treatment column");
    }
    if (summary.needs_density_score() && !summary.density_score)
        throw ConfigError("average_derivative requires a density score");
    if (summary.needs_density_score() && s.d() != 1)
        throw ConfigError("average_derivative is univariate");

    const auto n = s.n();
    IfParts parts;
    parts.loss_part.resize(n);
    parts.plug_part.resize(n);

    Eigen::VectorXd g(n);
    if (summary.needs_propensity()) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double p = propensity->evaluate(s.x.row(i))[0];
            const double clamped = std::clamp(p, kPropensityDelta, 1.0 - kPropensityDelta);
            if (clamped != p) ++parts.truncated;
            g[i] = clamped;
        }
    }

    switch (summary.kind) {
        case SummaryKind::MomentKappa:
        case SummaryKind::SmoothMoment: {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double theta = fit.evaluate(s.x.row(i))[0];
                parts.loss_part[i] = summary.f_prime(theta) * (s.z[i] - theta);
                parts.plug_part[i] = summary.f(theta);
            }
            break;
        }
        case SummaryKind::MeanCounterfactual: {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double mu1 = fit.evaluate(s.x.row(i))[1];
                parts.loss_part[i] = (*s.a)[i] == 1 ? (s.z[i] - mu1) / g[i] : 0.0;
                parts.plug_part[i] = mu1;
            }
            break;
        }
        case SummaryKind::HteVariance: {
            Eigen::VectorXd tau(n);
            Eigen::MatrixXd mu(n, 2);
            for (Eigen::Index i = 0; i < n; ++i) {
                const Eigen::VectorXd v = fit.evaluate(s.x.row(i));
                mu(i, 0) = v[0];
                mu(i, 1) = v[1];
                tau[i] = v[1] - v[0];
            }
            const double tau_bar = tau.mean();
            for (Eigen::Index i = 0; i < n; ++i) {
                const double c = tau[i] - tau_bar;
                const double arm_term = (*s.a)[i] == 1
                                            ? (s.z[i] - mu(i, 1)) / g[i]
                                            : -(s.z[i] - mu(i, 0)) / (1.0 - g[i]);
                parts.loss_part[i] = 2.0 * c * arm_term;
                parts.plug_part[i] = c * c;
            }
            break;
        }
        case SummaryKind::AverageDerivative: {
            // Integration by parts: P0 theta' = -P0[(p0'/p0) theta].
            for (Eigen::Index i = 0; i < n; ++i) {
                const double theta = fit.evaluate(s.x.row(i))[0];
                const double score = summary.density_score(s.x(i, 0));
                parts.loss_part[i] = -score * (s.z[i] - theta);
                parts.plug_part[i] = -score * theta;
            }
            break;
        }
    }
    return parts;
}

EstimateReport make_report(const Summary& summary, EstimatorKind kind, IfParts parts) {
    EstimateReport report;
    report.estimator_kind = kind;
    report.truncated_propensities = parts.truncated;
    report.psi_hat = kind == EstimatorKind::PlugIn
                         ? parts.plug_part.mean()
                         : (parts.loss_part + parts.plug_part).mean();
    report.if_values =
        (parts.loss_part + parts.plug_part).array() - report.psi_hat;
    report.if_mean = report.if_values.mean();
    std::tie(report.ci_lo, report.ci_hi) =
        wald_ci(report.psi_hat, report.if_values, &report.degenerate_ci);
    const auto n = report.if_values.size();
    report.se = std::sqrt(report.if_values.squaredNorm() / static_cast<double>(n) /
                          static_cast<double>(n));
    (void)summary;
    return report;
}

}  // namespace

EstimateReport plug_in(const Summary& summary, const FittedFunction& fit, const Sample& s,
                       FittedFunctionPtr propensity) {
    return make_report(summary, EstimatorKind::PlugIn,
                       compute_parts(summary, fit, s, propensity));
}

EstimateReport one_step(const Summary& summary, const FittedFunction& fit, const Sample& s,
                        FittedFunctionPtr propensity) {
    return make_report(summary, EstimatorKind::OneStep,
                       compute_parts(summary, fit, s, propensity));
}

std::string EstimateReport::csv_header() {
    return "estimator_kind,summary,n,psi_hat,se,ci_lo,ci_hi,if_mean,degenerate_ci,"
           "truncated_propensities,seed,provenance";
}

std::string EstimateReport::csv_row(const std::string& summary_name, Eigen::Index n,
                                    std::uint64_t seed) const {
    std::ostringstream out;
    out << std::setprecision(17);
    out << (estimator_kind == EstimatorKind::PlugIn ? "plug_in" : "one_step") << ','
        << summary_name << ',' << n << ',' << psi_hat << ',' << se << ',' << ci_lo << ','
        << ci_hi << ',' << if_mean << ',' << (degenerate_ci ? 1 : 0) << ','
        << truncated_propensities << ',' << seed << ',' << provenance;
    return out.str();
}

}  // namespace sievepi
