#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "sievepi/fitted_function.hpp"
#include "sievepi/sample.hpp"

namespace sievepi {

struct BoostingConfig {
    int n_trees = 300;
    int max_depth = 6;
    double learning_rate = 0.1;
    double subsample = 0.8;
    std::uint64_t seed = 0;
    int min_leaf = 2;
    // Early stopping on a 20% holdout: the ensemble is trained on the
    // remaining 80% until the holdout risk stops improving for `patience`
    // trees, then refit on all data at the best tree count. Set patience < 0
    // to disable and always use n_trees.
    int patience = 25;
};

class BoostingFit;

/// Least-squares gradient boosting with regression trees. Deterministic
/// given (sample, config). Constant outcomes yield a constant fit.
std::shared_ptr<BoostingFit> fit_boosting(const Sample& s, const BoostingConfig& cfg);

/// Logistic-loss gradient boosting of P(A=1|X=x) on the treatment column;
/// predictions are probabilities. Used for propensity fits.
std::shared_ptr<BoostingFit> fit_boosting_propensity(const Sample& s, const BoostingConfig& cfg);

/// Per-arm least-squares boosting; output (mu0, mu1).
FittedFunctionPtr fit_boosting_arms(const Sample& s, const BoostingConfig& cfg);

class BoostingFit final : public FittedFunction {
public:
    struct Node {
        int feature = -1;      // -1 for a leaf
        double threshold = 0;  // go left when x[feature] <= threshold
        int left = -1, right = -1;
        double value = 0.0;  // leaf prediction (learning rate folded in)
    };
    struct Tree {
        std::vector<Node> nodes;
        double predict(const Eigen::RowVectorXd& x) const;
    };

    BoostingFit(double base_score, std::vector<Tree> trees, bool logistic,
                std::vector<std::pair<double, double>> range,
                std::vector<double> staged_training_risk);

    int arity() const override { return 1; }
    Eigen::VectorXd evaluate(const Eigen::RowVectorXd& x) const override;
    std::vector<std::pair<double, double>> fitted_range() const override { return range_; }

    int tree_count() const { return static_cast<int>(trees_.size()); }
    /// Full-data training risk after each tree (index 0 = base score only).
    const std::vector<double>& staged_training_risk() const { return staged_risk_; }

private:
    double base_score_;
    std::vector<Tree> trees_;
    bool logistic_;
    std::vector<std::pair<double, double>> range_;
    std::vector<double> staged_risk_;
};

}  // namespace sievepi
