#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sievepi/fitted_function.hpp"
#include "sievepi/folds.hpp"
#include "sievepi/loss.hpp"
#include "sievepi/sample.hpp"

namespace sievepi {

/// Affine map taking [lo, hi] onto [-1/2, 1/2]. Applied to any real (no
/// clipping): sin/cos accept the whole line.
struct RangeTransform {
    double lo = 0.0;
    double hi = 1.0;
    double operator()(double v) const { return (v - lo) / (hi - lo) - 0.5; }
};

enum class SeriesKind { TrigComposed, TrigTensorGeneralized, TargetedSpan };

std::string series_kind_name(SeriesKind kind);
SeriesKind series_kind_from_name(const std::string& name);

/// Span of basis functions composed with an initial fit. K counts the
/// non-constant columns; the constant column is always present except for
/// TargetedSpan, whose two columns are exactly the initial fit and the
/// summary gradient.
struct SeriesSpace {
    struct TensorColumn {
        // One frequency per variable: index 0 is the transformed initial-fit
        // value u, indices 1..d the rescaled covariate coordinates. Phase bit
        // set => cos, clear => sin (ignored where freq is 0).
        std::vector<int> freq;
        std::uint32_t phases = 0;
    };

    SeriesKind kind = SeriesKind::TrigComposed;
    int K = 0;
    std::vector<RangeTransform> transforms;    // one per initial-fit output
    std::vector<RangeTransform> x_transforms;  // tensor kind: one per covariate
    FittedFunctionPtr init_fit;
    FittedFunctionPtr gradient_fit;  // TargetedSpan only
    std::vector<TensorColumn> tensor_columns;

    int column_count() const;
    /// Basis values at x; `arm` selects the initial-fit output component.
    Eigen::RowVectorXd basis_row(const Eigen::RowVectorXd& x, int arm = 0) const;
};

/// Derives the range transform from init->fitted_range() padded by 1% on
/// each side. Throws ConfigError on a degenerate (constant) range and
/// suggests a constant-fit bypass. TargetedSpan requires gradient_fit and
/// ignores K.
SeriesSpace build_series_space(FittedFunctionPtr init, SeriesKind kind, int K, const Sample& s,
                               FittedFunctionPtr gradient_fit = nullptr);

class SeriesFit final : public FittedFunction {
public:
    SeriesFit(SeriesSpace space, Eigen::MatrixXd coefficients, double attained_risk,
              std::vector<std::pair<double, double>> range, bool logistic = false);

    int arity() const override;
    Eigen::VectorXd evaluate(const Eigen::RowVectorXd& x) const override;
    std::vector<std::pair<double, double>> fitted_range() const override { return range_; }

    const SeriesSpace& space() const { return space_; }
    bool evaluate_is_probability() const { return logistic_; }
    /// Columns of the matrix are per-arm coefficient vectors.
    const Eigen::MatrixXd& coefficients() const { return coef_; }
    double attained_risk() const { return attained_risk_; }

private:
    SeriesSpace space_;
    Eigen::MatrixXd coef_;
    double attained_risk_;
    std::vector<std::pair<double, double>> range_;
    bool logistic_;  // evaluate() returns probabilities when set
};

/// Exact least squares via normal equations with ridge jitter
/// 1e-10 * trace(Gram)/cols for SquaredError/ArmSquaredError (the latter
/// decouples into per-arm problems); damped Newton for Logistic.
std::shared_ptr<SeriesFit> fit_series(const SeriesSpace& space, const Sample& s, const Loss& loss);

/// Default K grid {0, 1, ..., min(30, n/10)}.
std::vector<int> default_k_grid(Eigen::Index n);

/// k-fold CV over K: the initial fit is taken as given (fit once, on the
/// full data) and only the series coefficients are cross-validated. Ties go
/// to the smaller K; the returned fit is retrained on the full sample.
std::pair<int, std::shared_ptr<SeriesFit>> select_K_cv(FittedFunctionPtr init, SeriesKind kind,
                                                       const std::vector<int>& K_grid,
                                                       const Sample& s, const Loss& loss,
                                                       const FoldPlan& plan,
                                                       std::vector<double>* cv_risks = nullptr);

/// Plain-text serialization: kind, K, transform endpoints, coefficients at
/// 17 significant digits, and a caller-supplied reference (e.g. a path) to
/// the separately serialized initial fit.
void save_series_fit(const SeriesFit& fit, const std::string& path, const std::string& init_ref);
/// Loading needs the initial fit (and gradient fit, if any) resurrected by
/// the caller from the stored reference, which is returned via init_ref.
std::shared_ptr<SeriesFit> load_series_fit(const std::string& path, FittedFunctionPtr init,
                                           std::string* init_ref = nullptr,
                                           FittedFunctionPtr gradient_fit = nullptr);

}  // namespace sievepi
