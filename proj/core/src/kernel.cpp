#include "sievepi/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sievepi/cv.hpp"
#include "sievepi/errors.hpp"

namespace sievepi {

namespace {

double kernel_weight(KernelKind kind, double u) {
    switch (kind) {
        case KernelKind::Gaussian:
            return std::exp(-0.5 * u * u);
        case KernelKind::Epanechnikov:
            return std::abs(u) < 1.0 ? 1.0 - u * u : 0.0;
    }
    return 0.0;
}

}  // namespace

KernelFit::KernelFit(Eigen::MatrixXd x, Eigen::VectorXd z, double bandwidth, KernelKind kind)
    : x_(std::move(x)), z_(std::move(z)), bandwidth_(bandwidth), kind_(kind) {
    if (bandwidth_ <= 0.0) throw ConfigError("kernel bandwidth must be positive");
    if (x_.rows() == 0) throw DataError("kernel fit requires at least one training point");
}

Eigen::VectorXd KernelFit::evaluate(const Eigen::RowVectorXd& x) const {
    double num = 0.0, den = 0.0;
    double nn_dist = std::numeric_limits<double>::infinity();
    Eigen::Index nn = 0;
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
        const double dist = (x_.row(i) - x).norm();
        const double w = kernel_weight(kind_, dist / bandwidth_);
        num += w * z_[i];
        den += w;
        if (dist < nn_dist) {
            nn_dist = dist;
            nn = i;
        }
    }
    double out;
    if (den > 0.0) {
        out = num / den;
    } else {
        used_nn_fallback_ = true;
        out = z_[nn];
    }
    return Eigen::VectorXd::Constant(1, out);
}

std::vector<std::pair<double, double>> KernelFit::fitted_range() const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
        const double v = evaluate(x_.row(i))[0];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {{lo, hi}};
}

std::shared_ptr<KernelFit> fit_kernel(const Sample& s, double bandwidth, KernelKind kind) {
    s.validate();
    return std::make_shared<KernelFit>(s.x, s.z, bandwidth, kind);
}

std::vector<double> default_bandwidth_grid(const Sample& s, int count) {
    if (count < 2) throw ConfigError("bandwidth grid needs at least two values");
    double range = 0.0;
    for (Eigen::Index j = 0; j < s.d(); ++j)
        range = std::max(range, s.x.col(j).maxCoeff() - s.x.col(j).minCoeff());
    if (range <= 0.0) range = 1.0;  // degenerate covariates: any bandwidth works
    const double lo = range / 200.0, hi = range;
    std::vector<double> grid(count);
    for (int i = 0; i < count; ++i)
        grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
    return grid;
}

std::shared_ptr<KernelFit> fit_kernel_cv(const Sample& s, const FoldPlan& plan, KernelKind kind,
                                         std::vector<double> bandwidths) {
    s.validate();
    if (bandwidths.empty()) bandwidths = default_bandwidth_grid(s);
    const Loss loss{LossKind::SquaredError};
    double best_risk = std::numeric_limits<double>::infinity();
    double best_h = bandwidths.front();
    for (double h : bandwidths) {
        const double risk = cv_risk(
            [&](const Sample& train) { return fit_kernel(train, h, kind); }, loss, s, plan);
        if (risk < best_risk) {
            best_risk = risk;
            best_h = h;
        }
    }
    return fit_kernel(s, best_h, kind);
}

}  // namespace sievepi
