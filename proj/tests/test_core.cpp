#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "sievepi/cv.hpp"
#include "sievepi/errors.hpp"
#include "sievepi/folds.hpp"
#include "sievepi/loss.hpp"
#include "sievepi/sample.hpp"

using namespace sievepi;

namespace {

Sample two_point(double z0, double z1) {
    Sample s;
    s.x.resize(2, 1);
    s.x << 0.0, 1.0;
    s.z.resize(2);
    s.z << z0, z1;
    return s;
}

}  // namespace

TEST_CASE("empirical risk: constant zero fit on z=(1,-1)") {
    const Sample s = two_point(1.0, -1.0);
    ConstantFit zero(0.0);
    CHECK(empirical_risk(zero, Loss{LossKind::SquaredError}, s) == doctest::Approx(1.0));
}

TEST_CASE("empirical risk: interpolant has zero risk") {
    const Sample s = two_point(0.7, -0.2);
    auto interp = CallableFit::scalar([](double x) { return x < 0.5 ? 0.7 : -0.2; }, -0.2, 0.7);
    CHECK(empirical_risk(*interp, Loss{LossKind::SquaredError}, s) == doctest::Approx(0.0));
}

TEST_CASE("empirical risk: arm squared error direct formula") {
    Sample s = two_point(2.0, 3.0);
    Eigen::VectorXi a(2);
    a << 1, 0;
    s.a = a;
    Eigen::VectorXd both(2);
    both << 1.0, 1.0;  // (mu0, mu1) = (1, 1)
    ConstantFit fit(both);
    CHECK(empirical_risk(fit, Loss{LossKind::ArmSquaredError}, s) == doctest::Approx(2.5));
}

TEST_CASE("empirical risk: arity mismatch is a config error") {
    const Sample s = two_point(0.0, 0.0);
    ConstantFit fit(0.0);
    CHECK_THROWS_AS(empirical_risk(fit, Loss{LossKind::ArmSquaredError}, s), ConfigError);
}

TEST_CASE("empirical risk is invariant under row permutation") {
    Sample s;
    s.x.resize(4, 1);
    s.x << 0.1, 0.9, 0.4, 0.6;
    s.z.resize(4);
    s.z << 1.0, -2.0, 0.5, 3.0;
    auto f = CallableFit::scalar([](double x) { return 2.0 * x - 1.0; }, -1.0, 1.0);
    const double r1 = empirical_risk(*f, Loss{}, s);
    const Sample perm = s.subset({3, 1, 0, 2});
    CHECK(empirical_risk(*f, Loss{}, perm) == doctest::Approx(r1));
}

TEST_CASE("make_folds: sizes and determinism") {
    const FoldPlan p1 = make_folds(10, 5, 1);
    for (int f = 0; f < 5; ++f) CHECK(p1.test_indices(f).size() == 2);

    const FoldPlan p2 = make_folds(11, 5, 1);
    std::vector<int> sizes;
    for (int f = 0; f < 5; ++f) sizes.push_back(static_cast<int>(p2.test_indices(f).size()));
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<int>{2, 2, 2, 2, 3});

    CHECK(make_folds(10, 5, 1).assignments == p1.assignments);
    CHECK(make_folds(10, 5, 2).assignments != p1.assignments);

    CHECK_THROWS_AS(make_folds(5, 6, 1), ConfigError);
    CHECK_THROWS_AS(make_folds(5, 1, 1), ConfigError);
}

TEST_CASE("cv_risk: trivial fitters") {
    Sample s;
    s.x.resize(4, 1);
    s.x << 0, 1, 2, 3;
    s.z = Eigen::VectorXd::Zero(4);
    const Loss sq{LossKind::SquaredError};

    const auto zero_fitter = [](const Sample&) -> FittedFunctionPtr {
        return std::make_shared<ConstantFit>(0.0);
    };
    CHECK(cv_risk(zero_fitter, sq, s, make_folds(4, 2, 1)) == doctest::Approx(0.0));

    // leave-one-out with the sample-mean fitter on z = (0, 2)
    Sample s2 = s.subset({0, 1});
    s2.z << 0.0, 2.0;
    const auto mean_fitter = [](const Sample& train) -> FittedFunctionPtr {
        return std::make_shared<ConstantFit>(train.z.mean());
    };
    CHECK(cv_risk(mean_fitter, sq, s2, make_folds(2, 2, 1)) == doctest::Approx(4.0));
}

TEST_CASE("cv_risk of a fixed function equals its empirical risk on equal folds") {
    Sample s;
    s.x.resize(6, 1);
    s.x << 0, 1, 2, 3, 4, 5;
    s.z.resize(6);
    s.z << 1, -1, 2, 0.5, -0.5, 1.5;
    auto fixed = std::make_shared<ConstantFit>(0.25);
    const auto fitter = [&](const Sample&) -> FittedFunctionPtr { return fixed; };
    const Loss sq{LossKind::SquaredError};
    CHECK(cv_risk(fitter, sq, s, make_folds(6, 3, 7)) ==
          doctest::Approx(empirical_risk(*fixed, sq, s)));
}

TEST_CASE("sample CSV round trip and malformed input") {
    Sample s;
    s.x.resize(3, 2);
    s.x << 0.25, -1.5, 3.0, 0.125, 2.0, -0.75;
    s.z.resize(3);
    s.z << 1.0, -2.5, 0.0625;
    Eigen::VectorXi a(3);
    a << 1, 0, 1;
    s.a = a;

    const std::string path = "/tmp/sievepi_test_sample.csv";
    write_sample_csv(s, path);
    const Sample back = read_sample_csv(path);
    CHECK(back.x == s.x);
    CHECK(back.z == s.z);
    CHECK(back.a.value() == a);

    {
        std::ofstream bad(path);
        bad << "x1,z\n0.5,1.0\nnot-a-number,2.0\n";
    }
    try {
        read_sample_csv(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);  // line number
    }
    std::remove(path.c_str());
}
