#include "sievepi/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sievepi/errors.hpp"
#include "sievepi/rng.hpp"

namespace sievepi {

namespace {

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

struct TreeBuilder {
    const Eigen::MatrixXd& x;
    const Eigen::VectorXd& grad;     // first-order residuals
    const Eigen::VectorXd* hess;     // nullptr => unit hessian (squared error)
    int max_depth;
    int min_leaf;
    double learning_rate;

    std::vector<BoostingFit::Node> nodes;

    double hess_at(int i) const { return hess ? (*hess)[i] : 1.0; }

    int build(std::vector<int>& idx, int lo, int hi, int depth) {
        double g = 0.0, h = 0.0;
        for (int t = lo; t < hi; ++t) {
            g += grad[idx[t]];
            h += hess_at(idx[t]);
        }
        const double leaf_value = h > 0.0 ? learning_rate * g / h : 0.0;

        const int node_id = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes[node_id].value = leaf_value;
        if (depth >= max_depth || hi - lo < 2 * min_leaf) return node_id;

        // Exact greedy split: best SSE (or Newton) gain over all features.
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;
        for (int f = 0; f < x.cols(); ++f) {
            std::sort(idx.begin() + lo, idx.begin() + hi,
                      [&](int a, int b) { return x(a, f) < x(b, f); });
            double gl = 0.0, hl = 0.0;
            for (int t = lo; t < hi - 1; ++t) {
                gl += grad[idx[t]];
                hl += hess_at(idx[t]);
                if (t - lo + 1 < min_leaf || hi - 1 - t < min_leaf) continue;
                if (x(idx[t], f) == x(idx[t + 1], f)) continue;  // tied values
                const double gr = g - gl, hr = h - hl;
                if (hl <= 0.0 || hr <= 0.0) continue;
                const double gain = gl * gl / hl + gr * gr / hr - g * g / h;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (x(idx[t], f) + x(idx[t + 1], f));
                }
            }
        }
        if (best_feature < 0) return node_id;

        const auto mid_it = std::partition(idx.begin() + lo, idx.begin() + hi, [&](int a) {
            return x(a, best_feature) <= best_threshold;
        });
        const int mid = static_cast<int>(mid_it - idx.begin());
        if (mid == lo || mid == hi) return node_id;

        nodes[node_id].feature = best_feature;
        nodes[node_id].threshold = best_threshold;
        nodes[node_id].left = build(idx, lo, mid, depth + 1);
        nodes[node_id].right = build(idx, mid, hi, depth + 1);
        return node_id;
    }
};

struct BoostCore {
    double base_score = 0.0;
    std::vector<BoostingFit::Tree> trees;
    std::vector<double> staged_risk;
};

double risk_of(const Eigen::VectorXd& eta, const Eigen::VectorXd& y, bool logistic) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (logistic) {
            const double t = eta[i];
            const double l1p = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
            total += -y[i] * t + l1p;
        } else {
            const double r = y[i] - eta[i];
            total += r * r;
        }
    }
    return total / static_cast<double>(y.size());
}

// Boosts on rows `rows` of (x, y); staged risk and eta tracked on all rows.
BoostCore boost_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const std::vector<int>& rows, const BoostingConfig& cfg, bool logistic,
                     int n_trees, const std::vector<int>* holdout, int* best_iter_out) {
    BoostCore core;
    const auto n = y.size();

    double mean = 0.0;
    for (int i : rows) mean += y[i];
    mean /= static_cast<double>(rows.size());
    if (logistic) {
        const double p = std::clamp(mean, 1e-6, 1.0 - 1e-6);
        core.base_score = std::log(p / (1.0 - p));
    } else {
        core.base_score = mean;
    }

    Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, core.base_score);
    core.staged_risk.push_back(risk_of(eta, y, logistic));

    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    double best_holdout = std::numeric_limits<double>::infinity();
    int best_iter = 0, since_best = 0;
    Eigen::VectorXd grad(n), hessv(n);

    auto holdout_risk = [&]() {
        double total = 0.0;
        for (int i : *holdout) {
            if (logistic) {
                const double t = eta[i];
                const double l1p = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
                total += -y[i] * t + l1p;
            } else {
                const double r = y[i] - eta[i];
                total += r * r;
            }
        }
        return total / static_cast<double>(holdout->size());
    };

    for (int t = 0; t < n_trees; ++t) {
        for (int i : rows) {
            if (logistic) {
                const double p = expit(eta[i]);
                grad[i] = y[i] - p;
                hessv[i] = std::max(p * (1.0 - p), 1e-6);
            } else {
                grad[i] = y[i] - eta[i];
            }
        }

        std::vector<int> tree_rows = rows;
        if (cfg.subsample < 1.0) {
            rng.shuffle(tree_rows);
            const auto keep = std::max<std::size_t>(
                1, static_cast<std::size_t>(cfg.subsample * tree_rows.size()));
            tree_rows.resize(keep);
        }

        TreeBuilder builder{x, grad, logistic ? &hessv : nullptr,
                            cfg.max_depth, cfg.min_leaf, cfg.learning_rate, {}};
        builder.build(tree_rows, 0, static_cast<int>(tree_rows.size()), 0);
        BoostingFit::Tree tree{std::move(builder.nodes)};

        for (Eigen::Index i = 0; i < n; ++i) eta[i] += tree.predict(x.row(i));
        core.trees.push_back(std::move(tree));
        core.staged_risk.push_back(risk_of(eta, y, logistic));

        if (holdout) {
            const double hr = holdout_risk();
            if (hr < best_holdout - 1e-12) {
                best_holdout = hr;
                best_iter = t + 1;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }
    }
    if (best_iter_out) *best_iter_out = holdout ? best_iter : static_cast<int>(core.trees.size());
    return core;
}

std::shared_ptr<BoostingFit> fit_boosting_impl(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                               const BoostingConfig& cfg, bool logistic) {
    if (cfg.n_trees < 1) throw ConfigError("boosting requires n_trees >= 1");
    if (cfg.learning_rate <= 0.0) throw ConfigError("boosting learning rate must be positive");
    if (cfg.subsample <= 0.0 || cfg.subsample > 1.0)
        throw ConfigError("boosting subsample must be in (0, 1]");

    const int n = static_cast<int>(y.size());
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);

    int n_trees = cfg.n_trees;
    if (cfg.patience >= 0 && n >= 20) {
        // 20% holdout chooses the tree count; the final ensemble is refit on
        // all data at that count.
        std::vector<int> order = all;
        Rng rng(cfg.seed);
        rng.shuffle(order);
        const int n_hold = std::max(1, n / 5);
        std::vector<int> holdout(order.begin(), order.begin() + n_hold);
        std::vector<int> train(order.begin() + n_hold, order.end());
        std::sort(holdout.begin(), holdout.end());
        std::sort(train.begin(), train.end());
        int best_iter = 0;
        boost_rows(x, y, train, cfg, logistic, cfg.n_trees, &holdout, &best_iter);
        n_trees = std::max(1, best_iter);
    }

    BoostCore core = boost_rows(x, y, all, cfg, logistic, n_trees, nullptr, nullptr);

    // Training-prediction range (on the response scale).
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i < n; ++i) {
        double v = core.base_score;
        for (const auto& tree : core.trees) v += tree.predict(x.row(i));
        if (logistic) v = expit(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    return std::make_shared<BoostingFit>(
        core.base_score, std::move(core.trees), logistic,
        std::vector<std::pair<double, double>>{{lo, hi}}, std::move(core.staged_risk));
}

}  // namespace

double BoostingFit::Tree::predict(const Eigen::RowVectorXd& x) const {
    if (nodes.empty()) return 0.0;
    int cur = 0;
    while (nodes[cur].feature >= 0)
        cur = x[nodes[cur].feature] <= nodes[cur].threshold ? nodes[cur].left : nodes[cur].right;
    return nodes[cur].value;
}

BoostingFit::BoostingFit(double base_score, std::vector<Tree> trees, bool logistic,
                         std::vector<std::pair<double, double>> range,
                         std::vector<double> staged_training_risk)
    : base_score_(base_score),
      trees_(std::move(trees)),
      logistic_(logistic),
      range_(std::move(range)),
      staged_risk_(std::move(staged_training_risk)) {}

Eigen::VectorXd BoostingFit::evaluate(const Eigen::RowVectorXd& x) const {
    double v = base_score_;
    for (const auto& tree : trees_) v += tree.predict(x);
    if (logistic_) v = expit(v);
    return Eigen::VectorXd::Constant(1, v);
}

std::shared_ptr<BoostingFit> fit_boosting(const Sample& s, const BoostingConfig& cfg) {
    return fit_boosting_impl(s.x, s.z, cfg, false);
}

std::shared_ptr<BoostingFit> fit_boosting_propensity(const Sample& s, const BoostingConfig& cfg) {
    if (!s.a) throw ConfigError("propensity boosting requires a treatment column");
    Eigen::VectorXd y = s.a->cast<double>();
    return fit_boosting_impl(s.x, y, cfg, true);
}

FittedFunctionPtr fit_boosting_arms(const Sample& s, const BoostingConfig& cfg) {
    if (!s.a) throw ConfigError("per-arm boosting requires a treatment column");
    std::vector<int> idx0, idx1;
    for (Eigen::Index i = 0; i < s.n(); ++i) ((*s.a)[i] == 1 ? idx1 : idx0).push_back(i);
    if (idx0.empty() || idx1.empty()) throw DataError("both treatment arms must be nonempty");
    Sample s0 = s.subset(idx0);
    s0.a.reset();
    Sample s1 = s.subset(idx1);
    s1.a.reset();
    BoostingConfig cfg1 = cfg;
    cfg1.seed = cfg.seed ^ 0xabcdef1234567890ULL;
    return combine_arms(fit_boosting(s0, cfg), fit_boosting(s1, cfg1));
}

}  // namespace sievepi
