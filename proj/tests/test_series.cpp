#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "properties.hpp"
#include "sievepi/errors.hpp"
#include "sievepi/rng.hpp"
#include "sievepi/series.hpp"

using namespace sievepi;

namespace {

constexpr double kPi = 3.14159265358979323846;

// identity init fit on [-1, 1]: after the 1% padding the transform maps
// [-1.02, 1.02] onto [-1/2, 1/2]
FittedFunctionPtr identity_init() {
    return CallableFit::scalar([](double v) { return v; }, -1.0, 1.0);
}

Sample uniform_grid(int n) {
    Sample s;
    s.x.resize(n, 1);
    s.z.resize(n);
    for (int i = 0; i < n; ++i) {
        s.x(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / (n - 1);
        s.z[i] = 0.0;
    }
    return s;
}

}  // namespace

TEST_CASE("K=0 span fits the sample mean") {
    Rng rng(1);
    Sample s = uniform_grid(50);
    for (int i = 0; i < 50; ++i) s.z[i] = rng.normal();
    const auto fit = fit_series(build_series_space(identity_init(), SeriesKind::TrigComposed, 0, s),
                                s, Loss{});
    Eigen::RowVectorXd q(1);
    q << 0.37;
    CHECK(fit->evaluate(q)[0] == doctest::Approx(s.z.mean()));
}

TEST_CASE("K=2 basis columns are {1, sin(pi u), cos(pi u)}") {
    const Sample s = uniform_grid(10);
    const SeriesSpace space = build_series_space(identity_init(), SeriesKind::TrigComposed, 2, s);
    CHECK(space.column_count() == 3);
    Eigen::RowVectorXd q(1);
    for (double x : {-0.8, -0.1, 0.33, 0.95}) {
        q << x;
        const Eigen::RowVectorXd row = space.basis_row(q);
        const double u = space.transforms[0](x);
        CHECK(row[0] == doctest::Approx(1.0));
        CHECK(row[1] == doctest::Approx(std::sin(kPi * u)));
        CHECK(row[2] == doctest::Approx(std::cos(kPi * u)));
    }
}

TEST_CASE("span membership: one-hot coefficients reproduce a basis column") {
    const Sample s = uniform_grid(30);
    const SeriesSpace space = build_series_space(identity_init(), SeriesKind::TrigComposed, 4, s);
    for (int col = 0; col < space.column_count(); ++col) {
        Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(space.column_count(), 1);
        coef(col, 0) = 1.0;
        const SeriesFit onehot(space, coef, 0.0, {{-1.0, 1.0}});
        Eigen::RowVectorXd q(1);
        for (double x : {-0.9, 0.2, 0.7}) {
            q << x;
            CHECK(std::abs(onehot.evaluate(q)[0] - space.basis_row(q)[col]) <= 1e-12);
        }
    }
}

TEST_CASE("projection of the identity onto sin(pi u) under a uniform design") {
    // with u uniform on [-1/2, 1/2], the coefficient of u on sin(pi u) is
    // (int u sin(pi u) du) / (int sin^2(pi u) du) = (2/pi^2) / (1/2) = 4/pi^2
    const int n = 20001;
    Sample s;
    s.x.resize(n, 1);
    s.z.resize(n);
    for (int i = 0; i < n; ++i) {
        const double u = -0.5 + static_cast<double>(i) / (n - 1);
        s.x(i, 0) = u;
        s.z[i] = u;
    }
    // init mapping the data range onto itself so the padded transform is the
    // identity up to the 1% margin; compensate by regressing u directly
    Eigen::MatrixXd design(n, 2);
    for (int i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = std::sin(kPi * s.x(i, 0));
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(s.z);
    CHECK(coef[1] == doctest::Approx(4.0 / (kPi * kPi)).epsilon(1e-4));
}

TEST_CASE("arm squared error decouples into per-arm least squares") {
    Rng rng(3);
    const int n = 120;
    Sample s;
    s.x.resize(n, 1);
    s.z.resize(n);
    Eigen::VectorXi a(n);
    for (int i = 0; i < n; ++i) {
        s.x(i, 0) = rng.uniform(-1.0, 1.0);
        a[i] = rng.bernoulli(0.5) ? 1 : 0;
        s.z[i] = (a[i] ? 1.0 : -1.0) * s.x(i, 0) + 0.1 * rng.normal();
    }
    s.a = a;
    auto init = std::make_shared<CallableFit>(
        [](const Eigen::RowVectorXd& x) {
            Eigen::VectorXd out(2);
            out << -x[0], x[0];
            return out;
        },
        2, std::vector<std::pair<double, double>>{{-1.0, 1.0}, {-1.0, 1.0}});
    const SeriesSpace space = build_series_space(init, SeriesKind::TrigComposed, 3, s);
    const auto joint = fit_series(space, s, Loss{LossKind::ArmSquaredError});

    // per-arm scalar fits on the same space must agree exactly
    for (int arm = 0; arm < 2; ++arm) {
        std::vector<int> rows;
        for (int i = 0; i < n; ++i)
            if (a[i] == arm) rows.push_back(i);
        const Sample sub = s.subset(rows);
        Eigen::MatrixXd design(static_cast<Eigen::Index>(rows.size()), space.column_count());
        for (std::size_t r = 0; r < rows.size(); ++r)
            design.row(static_cast<Eigen::Index>(r)) = space.basis_row(sub.x.row(r), arm);
        const Eigen::VectorXd lone = design.colPivHouseholderQr().solve(sub.z);
        CHECK((lone - joint->coefficients().col(arm)).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("degenerate init range is a config error") {
    const Sample s = uniform_grid(20);
    auto constant = std::make_shared<ConstantFit>(1.0);
    CHECK_THROWS_AS(build_series_space(constant, SeriesKind::TrigComposed, 2, s), ConfigError);
}

TEST_CASE("tensor column count follows the total-degree enumeration") {
    const Sample s = uniform_grid(25);
    for (int K : {0, 2, 5, 9}) {
        const SeriesSpace space =
            build_series_space(identity_init(), SeriesKind::TrigTensorGeneralized, K, s);
        CHECK(space.column_count() == K + 1);  // constant + K non-constant columns
        CHECK(space.tensor_columns.size() == static_cast<std::size_t>(space.column_count()));
    }
}

TEST_CASE("targeted span has exactly the init and gradient columns") {
    const Sample s = uniform_grid(25);
    auto grad = CallableFit::scalar([](double v) { return 2.0 * v; }, -2.0, 2.0);
    const SeriesSpace space =
        build_series_space(identity_init(), SeriesKind::TargetedSpan, 99, s, grad);
    CHECK(space.column_count() == 2);
    Eigen::RowVectorXd q(1);
    q << 0.4;
    const Eigen::RowVectorXd row = space.basis_row(q);
    CHECK(row[0] == doctest::Approx(0.4));
    CHECK(row[1] == doctest::Approx(0.8));
}

TEST_CASE("select_K_cv recovers a noiseless span member at small K") {
    Sample s = uniform_grid(200);
    auto init = identity_init();
    const SeriesSpace probe = build_series_space(init, SeriesKind::TrigComposed, 2, s);
    for (int i = 0; i < 200; ++i)
        s.z[i] = 1.0 + 0.5 * std::sin(kPi * probe.transforms[0](s.x(i, 0)));
    auto [k_star, fit] =
        select_K_cv(init, SeriesKind::TrigComposed, {0, 1, 2, 4, 8}, s, Loss{},
                    make_folds(200, 10, 5));
    CHECK(k_star <= 2);
    CHECK(fit->attained_risk() <= 1e-10);
}

TEST_CASE("series serialization round trip") {
    Rng rng(13);
    Sample s = uniform_grid(60);
    for (int i = 0; i < 60; ++i) s.z[i] = std::cos(2.0 * s.x(i, 0)) + 0.1 * rng.normal();
    auto init = identity_init();
    const auto fit =
        fit_series(build_series_space(init, SeriesKind::TrigComposed, 5, s), s, Loss{});
    const std::string path = "/tmp/sievepi_test_series.txt";
    save_series_fit(*fit, path, "identity:test");
    std::string ref;
    const auto back = load_series_fit(path, init, &ref);
    CHECK(ref == "identity:test");
    Eigen::RowVectorXd q(1);
    for (double x : {-0.77, 0.02, 0.6}) {
        q << x;
        CHECK(back->evaluate(q)[0] == fit->evaluate(q)[0]);
    }
    std::remove(path.c_str());
}

TEST_CASE("property: nesting monotonicity and QR oracle agreement") {
    CHECK(sievepi_tests::check_series_nesting_and_qr() == "");
}

TEST_CASE("property: the identity stays outside the trig span for K <= 50") {
    CHECK(sievepi_tests::check_identity_not_in_span() == "");
}
