#pragma once

#include <Eigen/Dense>
#include <string>

#include "sievepi/fitted_function.hpp"
#include "sievepi/sample.hpp"

namespace sievepi {

enum class LossKind {
    SquaredError,     // (z - theta(x))^2
    Logistic,         // -z*theta(x) + log(1 + exp(theta(x)))
    ArmSquaredError,  // a (z - mu1(x))^2 + (1-a) (z - mu0(x))^2, prediction (mu0, mu1)
};

std::string loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& name);

struct Loss {
    LossKind kind = LossKind::SquaredError;

    int required_arity() const { return kind == LossKind::ArmSquaredError ? 2 : 1; }

    /// Per-observation loss. For ArmSquaredError `prediction` is (mu0, mu1)
    /// and `a` must be 0 or 1; for the scalar losses `a` is ignored.
    double evaluate(const Eigen::VectorXd& prediction, double z, int a = 0) const;
};

/// n^{-1} sum_i loss(f)(V_i). Throws ConfigError on arity mismatch.
double empirical_risk(const FittedFunction& f, const Loss& loss, const Sample& s);

/// Same, with predictions already materialized (n x q).
double empirical_risk(const Eigen::MatrixXd& predictions, const Loss& loss, const Sample& s);

}  // namespace sievepi
