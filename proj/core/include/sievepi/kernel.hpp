#pragma once

#include <memory>
#include <vector>

#include "sievepi/fitted_function.hpp"
#include "sievepi/folds.hpp"
#include "sievepi/sample.hpp"

namespace sievepi {

enum class KernelKind { Gaussian, Epanechnikov };

/// Nadaraya-Watson regression. Points where every kernel weight vanishes
/// (possible with the compact Epanechnikov kernel) fall back to the nearest
/// training point; `used_nn_fallback()` reports whether that ever happened.
class KernelFit final : public FittedFunction {
public:
    KernelFit(Eigen::MatrixXd x, Eigen::VectorXd z, double bandwidth, KernelKind kind);

    int arity() const override { return 1; }
    Eigen::VectorXd evaluate(const Eigen::RowVectorXd& x) const override;
    std::vector<std::pair<double, double>> fitted_range() const override;

    double bandwidth() const { return bandwidth_; }
    KernelKind kind() const { return kind_; }
    bool used_nn_fallback() const { return used_nn_fallback_; }

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd z_;
    double bandwidth_;
    KernelKind kind_;
    mutable bool used_nn_fallback_ = false;
};

std::shared_ptr<KernelFit> fit_kernel(const Sample& s, double bandwidth,
                                      KernelKind kind = KernelKind::Gaussian);

/// Bandwidth grid for CV: `count` log-spaced values from range/200 to range,
/// where range is the largest covariate range.
std::vector<double> default_bandwidth_grid(const Sample& s, int count = 20);

/// k-fold CV over the bandwidth grid; ties toward the smaller bandwidth.
std::shared_ptr<KernelFit> fit_kernel_cv(const Sample& s, const FoldPlan& plan,
                                         KernelKind kind = KernelKind::Gaussian,
                                         std::vector<double> bandwidths = {});

}  // namespace sievepi
