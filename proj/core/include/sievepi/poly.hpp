#pragma once

#include <memory>
#include <vector>

#include "sievepi/fitted_function.hpp"
#include "sievepi/folds.hpp"
#include "sievepi/sample.hpp"

namespace sievepi {

/// Univariate least-squares polynomial fit. Covariates are affinely mapped to
/// [-1, 1] (training range) and the design is built from Legendre polynomials
/// so high degrees stay well conditioned.
class PolyFit final : public FittedFunction {
public:
    PolyFit(double x_lo, double x_hi, Eigen::VectorXd coef,
            std::pair<double, double> fitted_lo_hi);

    int arity() const override { return 1; }
    Eigen::VectorXd evaluate(const Eigen::RowVectorXd& x) const override;
    std::vector<std::pair<double, double>> fitted_range() const override { return {range_}; }

    int degree() const { return static_cast<int>(coef_.size()) - 1; }
    const Eigen::VectorXd& coefficients() const { return coef_; }

private:
    double x_lo_, x_hi_;
    Eigen::VectorXd coef_;  // coef_[k] multiplies Legendre P_k of the rescaled x
    std::pair<double, double> range_;
};

std::shared_ptr<PolyFit> fit_poly(const Sample& s, int degree);

/// k-fold CV over degrees 0..max_degree; ties toward the smaller degree.
std::shared_ptr<PolyFit> fit_poly_cv(const Sample& s, const FoldPlan& plan, int max_degree = 10);

}  // namespace sievepi
