#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sievepi/cv.hpp"
#include "sievepi/fitted_function.hpp"
#include "sievepi/folds.hpp"
#include "sievepi/loss.hpp"
#include "sievepi/sample.hpp"

namespace sievepi {

/// Indicator tensor basis over the training covariate rows: column (s, j)
/// evaluates to 1(X_{j,s} <= x_s), entrywise over the coordinates in the
/// nonempty subset s. Duplicate columns (tied covariate values) are merged so
/// the constrained optimum is unique up to solver tolerance.
struct HalBasis {
    struct Column {
        std::uint32_t subset_mask = 0;  // bit j set => coordinate j in s
        int knot_index = 0;             // row of `knots`
    };

    Eigen::MatrixXd knots;  // training covariate rows
    std::vector<Column> columns;
    int d = 0;
    int max_interaction = 0;

    std::size_t column_count() const { return columns.size(); }

    double evaluate_column(std::size_t c, const Eigen::RowVectorXd& x) const {
        const Column& col = columns[c];
        for (int j = 0; j < d; ++j) {
            if ((col.subset_mask >> j) & 1u) {
                if (!(knots(col.knot_index, j) <= x[j])) return 0.0;
            }
        }
        return 1.0;
    }
};

constexpr std::size_t kDefaultHalColumnCap = 2'000'000;

/// Builds the basis with subsets restricted to |s| <= max_interaction.
/// Throws ResourceError naming the cap if the (pre-dedup) column count
/// exceeds it.
HalBasis build_hal_basis(const Sample& s, int max_interaction,
                         std::size_t column_cap = kDefaultHalColumnCap);

/// L1-constrained empirical risk minimizer over a HalBasis: the intercept is
/// included in the constraint |beta0| + sum |beta_{s,j}| <= M.
class HalFit final : public FittedFunction {
public:
    HalFit(std::shared_ptr<const HalBasis> basis, double beta0,
           std::vector<std::pair<std::size_t, double>> betas, double bound_M, LossKind loss);

    int arity() const override { return 1; }
    Eigen::VectorXd evaluate(const Eigen::RowVectorXd& x) const override;
    std::vector<std::pair<double, double>> fitted_range() const override;

    double beta0() const { return beta0_; }
    const std::vector<std::pair<std::size_t, double>>& betas() const { return betas_; }
    double bound_M() const { return bound_M_; }
    LossKind loss() const { return loss_; }
    const HalBasis& basis() const { return *basis_; }
    std::shared_ptr<const HalBasis> basis_ptr() const { return basis_; }

    /// |beta0| + sum |beta|; exact on the step-function ledger.
    double attained_l1() const;

private:
    std::shared_ptr<const HalBasis> basis_;
    double beta0_;
    std::vector<std::pair<std::size_t, double>> betas_;  // (column, coefficient), nonzero only
    double bound_M_;
    LossKind loss_;
};

struct HalSolverOptions {
    double constraint_rel_tol = 1e-4;  // |attained - M| / M at the active constraint
    double coord_tol = 1e-7;           // coordinate-descent convergence (relative)
    double lambda_min_ratio = 1e-6;    // penalty-path floor relative to lambda_max
    int max_sweeps = 20000;
    int max_bisection_iters = 60;
    int max_irls_iters = 50;  // logistic only
};

/// Fits HAL with bound M. Throws NumericError (with the final residual) on
/// non-convergence. For ArmSquaredError use fit_hal_arms.
std::shared_ptr<HalFit> fit_hal(const Sample& s, const Loss& loss, double M, const HalBasis& basis,
                                const HalSolverOptions& opts = {});
std::shared_ptr<HalFit> fit_hal(const Sample& s, const Loss& loss, double M,
                                std::shared_ptr<const HalBasis> basis,
                                const HalSolverOptions& opts = {});

/// Per-arm squared-error HAL for treatment problems: arm a is fit on the
/// rows with A=a using its own basis and bound. arity()==2, output (mu0, mu1).
FittedFunctionPtr fit_hal_arms(const Sample& s, double M0, double M1, int max_interaction = 1,
                               const HalSolverOptions& opts = {});

double variation_norm(const HalFit& fit);

enum class BoundStrategy { Oracle, Cv, Gcv, GcvRelaxed };

/// Selected variation-norm bound with its audit trail.
struct BoundSelection {
    BoundStrategy strategy = BoundStrategy::Cv;
    double selected_M = 0.0;
    std::vector<double> candidates;
    std::vector<double> cv_risks;       // parallel to candidates (Cv only)
    std::vector<double> component_Ms;   // M_1n..M_qn fed to F (Gcv/GcvRelaxed)
    double base_M = 0.0;                // M_n before enlargement
    double epsilon = 0.0;
    bool multiplicative = false;
};

/// Default candidate grid: 40 log-spaced values from 0.001 to
/// 20 x (empirical range of z).
std::vector<double> default_m_grid(const Sample& s, int count = 40);

/// k-fold CV over a strictly increasing candidate grid; ties toward the
/// smaller bound. Throws if every candidate fails on some fold.
BoundSelection select_M_cv(const Sample& s, const Loss& loss, const std::vector<double>& candidates,
                           const FoldPlan& plan, int max_interaction = 1,
                           const HalSolverOptions& opts = {});

/// Enlarged bound M_n + eps + F(M_1n + eps, ..., M_qn + eps), or the
/// multiplicative variant M_n (1+eps) + F(M_1n (1+eps), ...). F must be
/// nondecreasing in each argument; eps = 0 gives the plain enlarged bound.
BoundSelection enlarge_M(const BoundSelection& cv_selection,
                         const std::function<double(const std::vector<double>&)>& F,
                         const std::vector<double>& component_Ms, double epsilon,
                         bool multiplicative = false);

/// Variation-norm bound (B+1) * ||theta0||_v + |grad at the lower corner|,
/// for gradients of the composed form with derivative sup B.
double gradient_varnorm_bound(double theta_varnorm, double psi_dot_prime_sup,
                              double boundary_value_abs);

/// Plain-text serialization: header (d, n, M, loss kind), knot rows, then
/// coefficient rows (subset bitmask, knot index, coefficient) at 17
/// significant digits.
void save_hal_fit(const HalFit& fit, const std::string& path);
std::shared_ptr<HalFit> load_hal_fit(const std::string& path);

}  // namespace sievepi
