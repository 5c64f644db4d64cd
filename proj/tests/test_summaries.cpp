#include <doctest.h>

#include <cmath>

#include "properties.hpp"
#include "sievepi/errors.hpp"
#include "sievepi/rng.hpp"
#include "sievepi/summaries.hpp"

using namespace sievepi;

namespace {

Sample gaussian_sample(int n, std::uint64_t seed) {
    Rng rng(seed);
    Sample s;
    s.x.resize(n, 1);
    s.z.resize(n);
    for (int i = 0; i < n; ++i) {
        s.x(i, 0) = rng.uniform(-1.0, 1.0);
        s.z[i] = rng.normal();
    }
    return s;
}

}  // namespace

TEST_CASE("wald_ci arithmetic and the degenerate case") {
    // se = 1 at n = 100: half-width 1.959964 / 10
    Eigen::VectorXd ifs = Eigen::VectorXd::Zero(100);
    for (int i = 0; i < 100; ++i) ifs[i] = (i % 2 == 0) ? 10.0 : -10.0;  // mean sq = 100
    bool degenerate = true;
    const auto [lo, hi] = wald_ci(0.0, ifs, &degenerate);
    CHECK_FALSE(degenerate);
    CHECK(lo == doctest::Approx(-1.959964));
    CHECK(hi == doctest::Approx(1.959964));

    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(10);
    const auto [dlo, dhi] = wald_ci(2.0, zeros, &degenerate);
    CHECK(degenerate);
    CHECK(dlo == 2.0);
    CHECK(dhi == 2.0);
}

TEST_CASE("plug-in second moment of a constant fit") {
    const Sample s = gaussian_sample(50, 1);
    ConstantFit fit(1.5);
    const EstimateReport rep = plug_in(Summary::moment(2.0), fit, s);
    CHECK(rep.psi_hat == doctest::Approx(2.25));
    // IF_i = 2c(z_i - c) + c^2 - psi_hat = 3(z_i - 1.5)
    CHECK(rep.if_values.mean() == doctest::Approx(3.0 * (s.z.mean() - 1.5)).epsilon(1e-12));
}

TEST_CASE("hte variance of equal arms is zero") {
    Sample s = gaussian_sample(40, 2);
    Eigen::VectorXi a(40);
    for (int i = 0; i < 40; ++i) a[i] = i % 2;
    s.a = a;
    Eigen::VectorXd both(2);
    both << 0.7, 0.7;
    ConstantFit fit(both);
    auto prop = std::make_shared<ConstantFit>(0.5);
    const EstimateReport rep = plug_in(Summary::hte_variance(), fit, s, prop);
    CHECK(rep.psi_hat == doctest::Approx(0.0));
}

TEST_CASE("missing propensity is a config error naming it") {
    Sample s = gaussian_sample(20, 3);
    Eigen::VectorXi a = Eigen::VectorXi::Zero(20);
    for (int i = 0; i < 20; i += 2) a[i] = 1;
    s.a = a;
    Eigen::VectorXd both(2);
    both << 0.0, 1.0;
    ConstantFit fit(both);
    try {
        plug_in(Summary::hte_variance(), fit, s);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("propensity") != std::string::npos);
    }
}

TEST_CASE("propensity truncation is counted") {
    Sample s = gaussian_sample(30, 4);
    Eigen::VectorXi a = Eigen::VectorXi::Zero(30);
    for (int i = 0; i < 30; i += 3) a[i] = 1;
    s.a = a;
    Eigen::VectorXd both(2);
    both << 0.0, 1.0;
    ConstantFit fit(both);
    auto prop = std::make_shared<ConstantFit>(0.001);  // below the 0.01 guard
    const EstimateReport rep = plug_in(Summary::hte_variance(), fit, s, prop);
    CHECK(rep.truncated_propensities == 30);
}

TEST_CASE("one-step equals plug-in on an interpolating fit") {
    Sample s = gaussian_sample(25, 5);
    // theta interpolates z via a lookup on x (all x distinct a.s.)
    std::vector<std::pair<double, double>> table;
    for (int i = 0; i < 25; ++i) table.emplace_back(s.x(i, 0), s.z[i]);
    auto interp = CallableFit::scalar(
        [table](double x) {
            for (const auto& [xi, zi] : table)
                if (xi == x) return zi;
            return 0.0;
        },
        s.z.minCoeff(), s.z.maxCoeff());
    const EstimateReport pi = plug_in(Summary::moment(2.0), *interp, s);
    const EstimateReport os = one_step(Summary::moment(2.0), *interp, s);
    CHECK(os.psi_hat == doctest::Approx(pi.psi_hat).epsilon(1e-12));
}

TEST_CASE("smooth moment on-the-truth influence value") {
    // f(t) = t^2, theta(x) = 1 everywhere, observation with z = 1:
    // loss part f'(theta)(z - theta) = 0, plug part f(theta) = 1
    Sample s;
    s.x.resize(2, 1);
    s.x << 0.0, 0.5;
    s.z.resize(2);
    s.z << 1.0, 1.0;
    ConstantFit fit(1.0);
    const Summary sm = Summary::smooth([](double t) { return t * t; },
                                       [](double t) { return 2.0 * t; });
    const EstimateReport rep = plug_in(sm, fit, s);
    CHECK(rep.psi_hat == doctest::Approx(1.0));
    CHECK(rep.if_values[0] == doctest::Approx(0.0));
    CHECK(rep.degenerate_ci);
}

TEST_CASE("wald CI coverage on a known-variance mean estimator") {
    // psi = E[Z], IF_i = z_i - mean: the interval is the classic z-interval;
    // coverage over 10^4 replicates should be 0.95 +/- 0.01
    Rng rng(77);
    int covered = 0;
    const int R = 10000, n = 200;
    for (int r = 0; r < R; ++r) {
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = rng.normal();
        const double mean = z.mean();
        Eigen::VectorXd ifs = z.array() - mean;
        const auto [lo, hi] = wald_ci(mean, ifs);
        if (lo <= 0.0 && 0.0 <= hi) ++covered;
    }
    const double coverage = static_cast<double>(covered) / R;
    CHECK(coverage > 0.94);
    CHECK(coverage < 0.96);
}

TEST_CASE("property: gradient matches finite differences") {
    CHECK(sievepi_tests::check_gradient_finite_difference() == "");
}

TEST_CASE("property: one-step solves the empirical EIF equation") {
    CHECK(sievepi_tests::check_one_step_eif_zero() == "");
}

TEST_CASE("property: plug-in nonnegativity") {
    CHECK(sievepi_tests::check_plug_in_nonnegativity() == "");
}
