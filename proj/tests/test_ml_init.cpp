#include <doctest.h>

#include "sievepi/boosting.hpp"
#include "sievepi/dgp.hpp"
#include "sievepi/folds.hpp"
#include "sievepi/kernel.hpp"
#include "sievepi/loss.hpp"
#include "sievepi/poly.hpp"
#include "sievepi/rng.hpp"

using namespace sievepi;

namespace {

Sample curve_sample(int n, std::uint64_t seed, double noise = 0.1) {
    Rng rng(seed);
    Sample s;
    s.x.resize(n, 1);
    s.z.resize(n);
    for (int i = 0; i < n; ++i) {
        s.x(i, 0) = rng.uniform(-1.0, 1.0);
        s.z[i] = std::sin(3.0 * s.x(i, 0)) + noise * rng.normal();
    }
    return s;
}

}  // namespace

TEST_CASE("boosting: constant z gives a constant fit") {
    Sample s = curve_sample(50, 1);
    s.z.setConstant(2.5);
    BoostingConfig cfg;
    cfg.seed = 1;
    const auto fit = fit_boosting(s, cfg);
    Eigen::RowVectorXd q(1);
    q << 0.3;
    CHECK(fit->evaluate(q)[0] == doctest::Approx(2.5));
}

TEST_CASE("boosting: depth-0 stump is the sample mean") {
    const Sample s = curve_sample(40, 2);
    BoostingConfig cfg;
    cfg.n_trees = 1;
    cfg.max_depth = 0;
    cfg.learning_rate = 1.0;
    cfg.subsample = 1.0;
    cfg.patience = -1;
    const auto fit = fit_boosting(s, cfg);
    Eigen::RowVectorXd q(1);
    q << -0.4;
    CHECK(fit->evaluate(q)[0] == doctest::Approx(s.z.mean()));
}

TEST_CASE("boosting: staged training risk is nonincreasing") {
    const Sample s = curve_sample(200, 3);
    BoostingConfig cfg;
    cfg.seed = 3;
    cfg.n_trees = 60;
    cfg.subsample = 1.0;
    cfg.patience = -1;
    const auto fit = fit_boosting(s, cfg);
    const auto& staged = fit->staged_training_risk();
    REQUIRE(staged.size() >= 2);
    for (std::size_t i = 1; i < staged.size(); ++i) CHECK(staged[i] <= staged[i - 1] + 1e-12);
}

TEST_CASE("boosting: deterministic given seed") {
    const Sample s = curve_sample(150, 4);
    BoostingConfig cfg;
    cfg.seed = 11;
    const auto f1 = fit_boosting(s, cfg);
    const auto f2 = fit_boosting(s, cfg);
    Eigen::RowVectorXd q(1);
    for (double x : {-0.9, -0.3, 0.1, 0.8}) {
        q << x;
        CHECK(f1->evaluate(q)[0] == f2->evaluate(q)[0]);
    }
}

TEST_CASE("kernel: large bandwidth tends to the sample mean") {
    const Sample s = curve_sample(50, 5);
    const auto fit = fit_kernel(s, 1e6);
    Eigen::RowVectorXd q(1);
    q << 0.2;
    CHECK(fit->evaluate(q)[0] == doctest::Approx(s.z.mean()).epsilon(1e-6));
}

TEST_CASE("kernel: n=1 predicts that point everywhere") {
    Sample s;
    s.x.resize(1, 1);
    s.x << 0.4;
    s.z.resize(1);
    s.z << 7.0;
    const auto fit = fit_kernel(s, 0.1);
    Eigen::RowVectorXd q(1);
    q << -3.0;
    CHECK(fit->evaluate(q)[0] == doctest::Approx(7.0));
}

TEST_CASE("kernel: tiny bandwidth recovers the training value") {
    const Sample s = curve_sample(30, 6);
    const auto fit = fit_kernel(s, 1e-5);
    Eigen::RowVectorXd q(1);
    q << s.x(4, 0);
    CHECK(fit->evaluate(q)[0] == doctest::Approx(s.z[4]).epsilon(1e-9));
}

TEST_CASE("kernel: predictions stay inside [min z, max z]") {
    const Sample s = curve_sample(80, 7);
    const auto fit = fit_kernel_cv(s, make_folds(80, 10, 7));
    Eigen::RowVectorXd q(1);
    for (double x = -1.2; x <= 1.2; x += 0.05) {
        q << x;
        const double v = fit->evaluate(q)[0];
        CHECK(v >= s.z.minCoeff() - 1e-12);
        CHECK(v <= s.z.maxCoeff() + 1e-12);
    }
}

TEST_CASE("kernel: compact kernel far from data uses the nearest-neighbor fallback") {
    const Sample s = curve_sample(20, 8);
    const auto fit = fit_kernel(s, 0.01, KernelKind::Epanechnikov);
    Eigen::RowVectorXd q(1);
    q << 50.0;
    fit->evaluate(q);
    CHECK(fit->used_nn_fallback());
}

TEST_CASE("poly: noiseless polynomial recovered to 1e-8") {
    Rng rng(9);
    Sample s;
    const int n = 60;
    s.x.resize(n, 1);
    s.z.resize(n);
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        s.x(i, 0) = x;
        s.z[i] = 1.0 - 2.0 * x + 0.5 * x * x * x;
    }
    const auto fit = fit_poly(s, 3);
    Eigen::RowVectorXd q(1);
    for (double x : {-0.7, 0.0, 0.55}) {
        q << x;
        CHECK(fit->evaluate(q)[0] ==
              doctest::Approx(1.0 - 2.0 * x + 0.5 * x * x * x).epsilon(1e-8));
    }
}

TEST_CASE("poly: constant data selects degree 0") {
    Sample s = curve_sample(40, 10);
    s.z.setConstant(-1.25);
    const auto fit = fit_poly_cv(s, make_folds(40, 10, 1));
    CHECK(fit->degree() == 0);
    Eigen::RowVectorXd q(1);
    q << 0.1;
    CHECK(fit->evaluate(q)[0] == doctest::Approx(-1.25));
}

TEST_CASE("poly: linear data selects degree 1 and near-zero residual") {
    Rng rng(11);
    Sample s;
    const int n = 100;
    s.x.resize(n, 1);
    s.z.resize(n);
    for (int i = 0; i < n; ++i) {
        s.x(i, 0) = rng.uniform(-1.0, 1.0);
        s.z[i] = 3.0 * s.x(i, 0) - 0.5;
    }
    const auto fit = fit_poly_cv(s, make_folds(n, 10, 1));
    CHECK(fit->degree() == 1);
    CHECK(empirical_risk(*fit, Loss{}, s) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("boosting beats poly on the discontinuous step design") {
    const Dgp dgp = Dgp::make(DgpKind::StepTrig);
    const Sample train = sample_dgp(dgp, 2000, 21);
    const Sample test = sample_dgp(dgp, 2000, 22);
    BoostingConfig cfg;
    cfg.seed = 21;
    const auto xgb = fit_boosting(train, cfg);
    const auto poly = fit_poly_cv(train, make_folds(2000, 10, 21));
    const Loss sq{LossKind::SquaredError};
    CHECK(empirical_risk(*xgb, sq, test) < empirical_risk(*poly, sq, test));
}
