#include "sievepi/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "sievepi/errors.hpp"
#include "sievepi/rng.hpp"

namespace sievepi {

namespace {

constexpr double kPi = std::numbers::pi;

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double hal_exp_theta(double x) { return std::exp((1.0 - 2.0 * x - 2.0 * x * x) / 2.0); }

// Six-piece step function; zero on the uncovered interval [-1/2, -1/4).
double step_theta(double x) {
    if (x < -0.75) return 1.0;
    if (x < -0.5) return kPi;
    if (x < -0.25) return 0.0;
    if (x < 0.25) return 10.0 * x * x;
    if (x < 0.5) return std::sqrt(2.0);
    if (x < 0.75) return std::exp(-1.0);
    return std::cbrt(3.0);
}

double rough_f(double z) {
    if (z < -0.5) return 3.0 / (10.0 * kPi) * std::cos(5.0 * kPi * z) - 3.0 / 8.0;
    if (z < 0.0) return -1.5 * z * z;
    if (z < 0.5) return 3.0 * z * z;
    return -1.5 * std::exp(2.0 - 4.0 * z) - 3.0 * z + 15.0 / 4.0;
}

double rough_f_prime(double z) {
    if (z < -0.5) return -1.5 * std::sin(5.0 * kPi * z);
    if (z < 0.0) return -3.0 * z;
    if (z < 0.5) return 6.0 * z;
    return 6.0 * std::exp(2.0 - 4.0 * z) - 3.0;
}

double hte_mu1(double x) {
    if (x < -1.0 / 3.0) return x * x;
    if (x < 1.0 / 3.0) return std::exp(x);
    return 1.0;
}

double rough_g(double x) {
    double t;
    if (x <= -0.5)
        t = -5.0 / 3.0 * x * x * x - 15.0 / 4.0 * x * x - 5.0 / 3.0 * x - 25.0 / 96.0;
    else if (x <= 0.0)
        t = 5.0 / 6.0 * x * x * x * x + 5.0 / 3.0 * x * x * x;
    else if (x <= 0.5)
        t = 5.0 / 3.0 * x * x * x;
    else
        t = 5.0 * x * x - 15.0 / 4.0 * x + 5.0 / 6.0;
    return expit(t);
}

// 10-node Gauss-Legendre on [-1, 1].
constexpr double kGlNodes[10] = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472,
    -0.1488743389816312, 0.1488743389816312,  0.4333953941292472,  0.6794095682990244,
    0.8650633666889845,  0.9739065285171717};
constexpr double kGlWeights[10] = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963,
    0.2955242247147529, 0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
    0.1494513491505806, 0.0666713443086881};

double gl_panel(const std::function<double(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double total = 0.0;
    for (int q = 0; q < 10; ++q) total += kGlWeights[q] * f(mid + half * kGlNodes[q]);
    return half * total;
}

// Composite Gauss-Legendre split at the supplied breakpoints (discontinuity
// or kink locations), `panels` uniform panels per smooth piece.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::vector<double> breaks, int panels) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double lo = std::clamp(breaks[p], a, b), hi = std::clamp(breaks[p + 1], a, b);
        if (hi <= lo) continue;
        const double w = (hi - lo) / panels;
        for (int q = 0; q < panels; ++q) total += gl_panel(f, lo + q * w, lo + (q + 1) * w);
    }
    return total;
}

std::vector<double> dgp_breakpoints(DgpKind kind) {
    switch (kind) {
        case DgpKind::StepTrig:
            return {-0.75, -0.5, -0.25, 0.25, 0.5, 0.75};
        case DgpKind::HteStep:
            return {-0.75, -0.5, -1.0 / 3.0, -0.25, 0.25, 1.0 / 3.0, 0.5, 0.75};
        case DgpKind::HteRoughG:
            return {-0.5, 0.0, 0.5};
        case DgpKind::RoughF: {
            // Kinks of f(cos(10x)): where cos(10x) crosses -1/2, 0, 1/2.
            std::vector<double> breaks;
            for (double target : {2.0 * kPi / 3.0, kPi / 2.0, kPi / 3.0}) {
                for (int k = -4; k <= 4; ++k) {
                    for (double root : {(target + 2.0 * kPi * k) / 10.0,
                                        (-target + 2.0 * kPi * k) / 10.0}) {
                        if (root > -1.0 && root < 1.0) breaks.push_back(root);
                    }
                }
            }
            return breaks;
        }
        default:
            return {};
    }
}

}  // namespace

std::string dgp_kind_name(DgpKind kind) {
    switch (kind) {
        case DgpKind::HalExp:
            return "hal_exp";
        case DgpKind::StepTrig:
            return "step_trig";
        case DgpKind::RoughF:
            return "rough_f";
        case DgpKind::HteStep:
            return "hte_step";
        case DgpKind::HteRoughG:
            return "hte_rough_g";
        case DgpKind::ConstantTest:
            return "constant_test";
    }
    throw ConfigError("unknown DGP kind");
}

DgpKind dgp_kind_from_name(const std::string& name) {
    for (DgpKind kind : {DgpKind::HalExp, DgpKind::StepTrig, DgpKind::RoughF, DgpKind::HteStep,
                         DgpKind::HteRoughG, DgpKind::ConstantTest}) {
        if (dgp_kind_name(kind) == name) return kind;
    }
    throw ConfigError("unknown DGP kind: " + name);
}

Dgp Dgp::make(DgpKind kind) {
    Dgp dgp;
    dgp.kind = kind;
    switch (kind) {
        case DgpKind::HalExp:
            dgp.theta0 = hal_exp_theta;
            dgp.summary = Summary::moment(2.0);
            dgp.noise_sd = 0.0;  // exponential outcome noise
            // theta0 rises from 0 to exp(3/4) at x = -1/2 and falls back: the
            // variation norm is twice the peak.
            dgp.theta0_varnorm = 2.0 * std::exp(0.75);
            break;
        case DgpKind::StepTrig:
            dgp.theta0 = step_theta;
            dgp.summary = Summary::moment(2.0);
            dgp.noise_sd = 0.25;
            break;
        case DgpKind::RoughF:
            dgp.theta0 = [](double x) { return std::cos(10.0 * x); };
            dgp.summary = Summary::smooth(rough_f, rough_f_prime);
            dgp.noise_sd = 1.0;
            break;
        case DgpKind::HteStep:
            dgp.has_treatment = true;
            dgp.mu0 = step_theta;
            dgp.mu1 = hte_mu1;
            dgp.g0 = [](double x) { return expit(-x); };
            dgp.summary = Summary::hte_variance();
            dgp.noise_sd = 0.25;
            break;
        case DgpKind::HteRoughG:
            dgp.has_treatment = true;
            dgp.mu0 = [](double x) { return std::exp(-x * x); };
            dgp.mu1 = [](double x) { return std::exp(-x * x + 0.8 * x + 0.5); };
            dgp.g0 = rough_g;
            dgp.summary = Summary::hte_variance();
            dgp.noise_sd = 0.25;
            break;
        case DgpKind::ConstantTest:
            return constant_test(1.0);
    }
    return dgp;
}

Dgp Dgp::constant_test(double c, double noise_sd) {
    Dgp dgp;
    dgp.kind = DgpKind::ConstantTest;
    dgp.theta0 = [c](double) { return c; };
    dgp.summary = Summary::moment(2.0);
    dgp.noise_sd = noise_sd;
    dgp.theta0_varnorm = std::abs(c);
    return dgp;
}

Sample sample_dgp(const Dgp& dgp, Eigen::Index n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("sample size must be positive");
    Rng rng(seed);
    Sample s;
    s.x.resize(n, 1);
    s.z.resize(n);
    if (dgp.has_treatment) s.a = Eigen::VectorXi(n);

    for (Eigen::Index i = 0; i < n; ++i) {
        if (dgp.kind == DgpKind::HalExp) {
            const double x = rng.normal();
            s.x(i, 0) = x;
            s.z[i] = rng.exponential(1.0 / dgp.theta0(x));
            continue;
        }
        const double x = 2.0 * rng.uniform() - 1.0;
        s.x(i, 0) = x;
        if (dgp.has_treatment) {
            const int a = rng.bernoulli(dgp.g0(x)) ? 1 : 0;
            (*s.a)[i] = a;
            const double mean = a == 1 ? dgp.mu1(x) : dgp.mu0(x);
            s.z[i] = mean + dgp.noise_sd * rng.normal();
        } else {
            s.z[i] = dgp.theta0(x) + dgp.noise_sd * rng.normal();
        }
    }
    return s;
}

namespace {

TrueTargets targets_at_resolution(const Dgp& dgp, int panels) {
    TrueTargets out;
    const std::vector<double> breaks = dgp_breakpoints(dgp.kind);

    if (dgp.kind == DgpKind::HalExp) {
        // X ~ N(0,1): integrate against the normal density on [-12, 12].
        const auto expect = [&](const std::function<double(double)>& h) {
            return integrate(
                [&](double x) {
                    return h(x) * std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
                },
                -12.0, 12.0, {}, panels);
        };
        const auto theta = dgp.theta0;
        const double psi = expect([&](double x) { return theta(x) * theta(x); });
        // IF = 2 theta (z - theta) + theta^2 - psi with Var(Z|X) = theta^2.
        out.psi = psi;
        out.xi2 = expect([&](double x) {
            const double t2 = theta(x) * theta(x);
            return 4.0 * t2 * t2 + (t2 - psi) * (t2 - psi);
        });
        return out;
    }

    // X ~ Unif(-1, 1).
    const auto expect = [&](const std::function<double(double)>& h) {
        return 0.5 * integrate(h, -1.0, 1.0, breaks, panels);
    };

    if (dgp.has_treatment) {
        const auto tau = [&](double x) { return dgp.mu1(x) - dgp.mu0(x); };
        const double tau_bar = expect(tau);
        const double psi = expect([&](double x) {
            const double c = tau(x) - tau_bar;
            return c * c;
        });
        const double sigma2 = dgp.noise_sd * dgp.noise_sd;
        out.psi = psi;
        out.xi2 = expect([&](double x) {
            const double c = tau(x) - tau_bar;
            const double g = dgp.g0(x);
            const double loss_var = 4.0 * c * c * sigma2 * (1.0 / g + 1.0 / (1.0 - g));
            return loss_var + (c * c - psi) * (c * c - psi);
        });
        return out;
    }

    const auto& f = dgp.summary.f;
    const auto& fp = dgp.summary.f_prime;
    const double sigma2 = dgp.noise_sd * dgp.noise_sd;
    const double psi = expect([&](double x) { return f(dgp.theta0(x)); });
    out.psi = psi;
    out.xi2 = expect([&](double x) {
        const double t = dgp.theta0(x);
        return fp(t) * fp(t) * sigma2 + (f(t) - psi) * (f(t) - psi);
    });
    return out;
}

}  // namespace

TrueTargets true_targets(const Dgp& dgp) {
    const TrueTargets coarse = targets_at_resolution(dgp, 200);
    TrueTargets fine = targets_at_resolution(dgp, 400);
    const double rel = std::max(std::abs(fine.psi - coarse.psi) / std::max(std::abs(fine.psi), 1e-12),
                                std::abs(fine.xi2 - coarse.xi2) / std::max(fine.xi2, 1e-12));
    if (rel > 1e-3)
        throw NumericError("quadrature for " + dgp_kind_name(dgp.kind) +
                           " did not reach 0.1% (achieved " + std::to_string(rel) + ")");
    fine.rel_error = rel;
    return fine;
}

}  // namespace sievepi
