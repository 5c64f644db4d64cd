#include "sievepi/loss.hpp"

#include <cmath>

#include "sievepi/errors.hpp"

namespace sievepi {

std::string loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::SquaredError: return "squared_error";
        case LossKind::Logistic: return "logistic";
        case LossKind::ArmSquaredError: return "arm_squared_error";
    }
    return "unknown";
}

LossKind loss_kind_from_name(const std::string& name) {
    if (name == "squared_error") return LossKind::SquaredError;
    if (name == "logistic") return LossKind::Logistic;
    if (name == "arm_squared_error") return LossKind::ArmSquaredError;
    throw ConfigError("unknown loss kind: " + name);
}

double Loss::evaluate(const Eigen::VectorXd& prediction, double z, int a) const {
    switch (kind) {
        case LossKind::SquaredError: {
            const double r = z - prediction[0];
            return r * r;
        }
        case LossKind::Logistic: {
            const double t = prediction[0];
            // log(1+exp(t)) computed stably for large |t|
            const double log1pexp = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
            return -z * t + log1pexp;
        }
        case LossKind::ArmSquaredError: {
            const double r1 = z - prediction[1];
            const double r0 = z - prediction[0];
            return a == 1 ? r1 * r1 : r0 * r0;
        }
    }
    return 0.0;
}

double empirical_risk(const Eigen::MatrixXd& predictions, const Loss& loss, const Sample& s) {
    if (predictions.cols() != loss.required_arity())
        throw ConfigError("fit arity " + std::to_string(predictions.cols()) +
                          " does not match loss requirement " +
                          std::to_string(loss.required_arity()));
    if (loss.kind == LossKind::ArmSquaredError && !s.a)
        throw ConfigError("arm squared-error loss requires a treatment column");
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.n(); ++i) {
        const int a = s.a ? (*s.a)[i] : 0;
        total += loss.evaluate(predictions.row(i).transpose(), s.z[i], a);
    }
    return total / static_cast<double>(s.n());
}

double empirical_risk(const FittedFunction& f, const Loss& loss, const Sample& s) {
    if (f.arity() != loss.required_arity())
        throw ConfigError("fit arity " + std::to_string(f.arity()) +
                          " does not match loss requirement " +
                          std::to_string(loss.required_arity()));
    return empirical_risk(f.evaluate_all(s.x), loss, s);
}

}  // namespace sievepi
