#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace sievepi {

/// Evaluable fitted regression object. Vector-valued fits (e.g. per-arm
/// outcome regressions) report arity q > 1. Implementations must be
/// deterministic and immutable after construction.
class FittedFunction {
public:
    virtual ~FittedFunction() = default;

    virtual int arity() const = 0;

    /// Evaluate at one covariate row; returns a vector of length arity().
    virtual Eigen::VectorXd evaluate(const Eigen::RowVectorXd& x) const = 0;

    /// Per-output (min, max) over the training covariates.
    virtual std::vector<std::pair<double, double>> fitted_range() const = 0;

    /// Batch evaluation, one row per input row.
    Eigen::MatrixXd evaluate_all(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd out(x.rows(), arity());
        for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = evaluate(x.row(i)).transpose();
        return out;
    }
};

using FittedFunctionPtr = std::shared_ptr<const FittedFunction>;

/// Constant fit (possibly vector-valued); the degenerate baseline.
class ConstantFit final : public FittedFunction {
public:
    explicit ConstantFit(Eigen::VectorXd value) : value_(std::move(value)) {}
    explicit ConstantFit(double value) : value_(Eigen::VectorXd::Constant(1, value)) {}

    int arity() const override { return static_cast<int>(value_.size()); }
    Eigen::VectorXd evaluate(const Eigen::RowVectorXd&) const override { return value_; }
    std::vector<std::pair<double, double>> fitted_range() const override {
        std::vector<std::pair<double, double>> r;
        for (Eigen::Index j = 0; j < value_.size(); ++j) r.emplace_back(value_[j], value_[j]);
        return r;
    }

private:
    Eigen::VectorXd value_;
};

/// Adapter wrapping a callable; used by tests and the DGP truths.
class CallableFit final : public FittedFunction {
public:
    using Fn = std::function<Eigen::VectorXd(const Eigen::RowVectorXd&)>;
    CallableFit(Fn fn, int arity, std::vector<std::pair<double, double>> range)
        : fn_(std::move(fn)), arity_(arity), range_(std::move(range)) {}

    static FittedFunctionPtr scalar(std::function<double(double)> f, double lo, double hi) {
        return std::make_shared<CallableFit>(
            [f = std::move(f)](const Eigen::RowVectorXd& x) {
                return Eigen::VectorXd::Constant(1, f(x[0]));
            },
            1, std::vector<std::pair<double, double>>{{lo, hi}});
    }

    int arity() const override { return arity_; }
    Eigen::VectorXd evaluate(const Eigen::RowVectorXd& x) const override { return fn_(x); }
    std::vector<std::pair<double, double>> fitted_range() const override { return range_; }

private:
    Fn fn_;
    int arity_;
    std::vector<std::pair<double, double>> range_;
};

/// Stacks scalar fits into a vector-valued fit, output a = arms[a].
class StackedFit final : public FittedFunction {
public:
    explicit StackedFit(std::vector<FittedFunctionPtr> arms) : arms_(std::move(arms)) {}

    int arity() const override { return static_cast<int>(arms_.size()); }
    Eigen::VectorXd evaluate(const Eigen::RowVectorXd& x) const override {
        Eigen::VectorXd out(arms_.size());
        for (std::size_t a = 0; a < arms_.size(); ++a) out[a] = arms_[a]->evaluate(x)[0];
        return out;
    }
    std::vector<std::pair<double, double>> fitted_range() const override {
        std::vector<std::pair<double, double>> r;
        for (const auto& arm : arms_) r.push_back(arm->fitted_range()[0]);
        return r;
    }

private:
    std::vector<FittedFunctionPtr> arms_;
};

inline FittedFunctionPtr combine_arms(FittedFunctionPtr arm0, FittedFunctionPtr arm1) {
    return std::make_shared<StackedFit>(
        std::vector<FittedFunctionPtr>{std::move(arm0), std::move(arm1)});
}

}  // namespace sievepi
