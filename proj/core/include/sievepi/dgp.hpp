#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "sievepi/sample.hpp"
#include "sievepi/summaries.hpp"

namespace sievepi {

enum class DgpKind {
    HalExp,        // X ~ N(0,1), smooth exp theta0, exponential outcome
    StepTrig,      // X ~ Unif(-1,1), six-piece step theta0, N(theta0, 0.25^2)
    RoughF,        // theta0 = cos(10x), N(theta0, 1), rough f in the estimand
    HteStep,       // treatment DGP with step mu00 and piecewise mu01
    HteRoughG,     // treatment DGP with smooth mu0a and rough g0
    ConstantTest,  // theta0 = c: closed-form targets for tests
};

std::string dgp_kind_name(DgpKind kind);
DgpKind dgp_kind_from_name(const std::string& name);

/// A data-generating process with its closed-form truth and the summary it
/// is paired with in the experiments.
struct Dgp {
    DgpKind kind = DgpKind::ConstantTest;
    Summary summary;
    bool has_treatment = false;

    std::function<double(double)> theta0;  // scalar DGPs
    std::function<double(double)> mu0;     // treatment DGPs
    std::function<double(double)> mu1;
    std::function<double(double)> g0;      // true propensity
    double noise_sd = 0.25;                // Gaussian outcome noise (not HalExp)

    /// Variation norm of theta0 (HalExp only; used for the oracle bound
    /// 3 * ||theta0||_v).
    double theta0_varnorm = 0.0;

    static Dgp make(DgpKind kind);
    static Dgp constant_test(double c, double noise_sd = 0.5);
};

/// Deterministic given (dgp, n, seed). Draw order per observation is fixed:
/// covariate, then treatment (if any), then outcome.
Sample sample_dgp(const Dgp& dgp, Eigen::Index n, std::uint64_t seed);

struct TrueTargets {
    double psi = 0.0;
    double xi2 = 0.0;       // variance of the efficient influence function
    double rel_error = 0.0;  // declared quadrature error bound (relative)
};

/// Quadrature-based truth; declared relative error < 0.1% (piecewise
/// Gauss-Legendre split at the DGPs' discontinuity points). Throws
/// NumericError if the refinement check fails that tolerance.
TrueTargets true_targets(const Dgp& dgp);

}  // namespace sievepi
