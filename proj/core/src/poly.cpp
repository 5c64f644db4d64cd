#include "sievepi/poly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "sievepi/cv.hpp"
#include "sievepi/errors.hpp"

namespace sievepi {

namespace {

// Legendre P_0..P_deg at u via the three-term recurrence.
Eigen::RowVectorXd legendre_row(double u, int degree) {
    Eigen::RowVectorXd out(degree + 1);
    out[0] = 1.0;
    if (degree >= 1) out[1] = u;
    for (int k = 2; k <= degree; ++k)
        out[k] = ((2.0 * k - 1.0) * u * out[k - 1] - (k - 1.0) * out[k - 2]) / k;
    return out;
}

}  // namespace

PolyFit::PolyFit(double x_lo, double x_hi, Eigen::VectorXd coef,
                 std::pair<double, double> fitted_lo_hi)
    : x_lo_(x_lo), x_hi_(x_hi), coef_(std::move(coef)), range_(fitted_lo_hi) {}

Eigen::VectorXd PolyFit::evaluate(const Eigen::RowVectorXd& x) const {
    const double span = x_hi_ > x_lo_ ? x_hi_ - x_lo_ : 1.0;
    const double u = 2.0 * (x[0] - x_lo_) / span - 1.0;
    return Eigen::VectorXd::Constant(1, legendre_row(u, degree()) * coef_);
}

std::shared_ptr<PolyFit> fit_poly(const Sample& s, int degree) {
    s.validate();
    if (s.d() != 1) throw ConfigError("polynomial fit is univariate");
    if (degree < 0) throw ConfigError("polynomial degree must be nonnegative");
    const auto n = s.n();
    if (n <= degree) throw DataError("polynomial fit needs n > degree");

    const double x_lo = s.x.col(0).minCoeff(), x_hi = s.x.col(0).maxCoeff();
    const double span = x_hi > x_lo ? x_hi - x_lo : 1.0;
    Eigen::MatrixXd design(n, degree + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = 2.0 * (s.x(i, 0) - x_lo) / span - 1.0;
        design.row(i) = legendre_row(u, degree);
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(s.z);

    const Eigen::VectorXd fitted = design * coef;
    return std::make_shared<PolyFit>(
        x_lo, x_hi, coef, std::make_pair(fitted.minCoeff(), fitted.maxCoeff()));
}

std::shared_ptr<PolyFit> fit_poly_cv(const Sample& s, const FoldPlan& plan, int max_degree) {
    s.validate();
    const Loss loss{LossKind::SquaredError};
    double best_risk = std::numeric_limits<double>::infinity();
    int best_degree = 0;
    for (int degree = 0; degree <= max_degree; ++degree) {
        double risk;
        try {
            risk = cv_risk([&](const Sample& train) { return fit_poly(train, degree); }, loss, s,
                           plan);
        } catch (const NumericError&) {
            break;  // degree too high for the fold sizes
        }
        // strict-enough improvement only, so exact ties (e.g. noiseless
        // low-degree truth) resolve to the smaller degree
        if (!std::isfinite(best_risk) ||
            risk < best_risk - 1e-12 * std::max(1.0, best_risk)) {
            best_risk = risk;
            best_degree = degree;
        }
    }
    return fit_poly(s, best_degree);
}

}  // namespace sievepi
