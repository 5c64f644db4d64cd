#include "sievepi/series.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "sievepi/errors.hpp"

namespace sievepi {

namespace {

// Half-period basis: the transformed variable lives in [-1/2, 1/2] but the
// basis is the Fourier system for [-1, 1], so the data cover only half a
// period and the span is not forced to be periodic over the fitted range.
constexpr double kBasisPi = std::numbers::pi;

RangeTransform padded_transform(double lo, double hi, const char* what) {
    if (!(std::isfinite(lo) && std::isfinite(hi)))
        throw ConfigError(std::string(what) + " range is not finite");
    if (!(lo < hi))
        throw ConfigError(std::string(what) +
                          " range is degenerate (lo == hi); fit a constant directly instead of a "
                          "series over it");
    const double pad = 0.01 * (hi - lo);
    return RangeTransform{lo - pad, hi + pad};
}

// Compositions of `total` into `parts` nonnegative integers, lexicographic.
void enumerate_compositions(int total, int parts, std::vector<int>& current,
                            const std::function<void(const std::vector<int>&)>& emit) {
    if (parts == 1) {
        current.push_back(total);
        emit(current);
        current.pop_back();
        return;
    }
    for (int head = 0; head <= total; ++head) {
        current.push_back(head);
        enumerate_compositions(total - head, parts - 1, current, emit);
        current.pop_back();
    }
}

std::vector<SeriesSpace::TensorColumn> enumerate_tensor_columns(int n_vars, int K) {
    std::vector<SeriesSpace::TensorColumn> columns;
    columns.push_back({std::vector<int>(n_vars, 0), 0});  // constant
    int non_constant = 0;
    for (int degree = 1; non_constant < K; ++degree) {
        std::vector<int> scratch;
        enumerate_compositions(degree, n_vars, scratch, [&](const std::vector<int>& freq) {
            if (non_constant >= K) return;
            int active = 0;
            for (int f : freq) active += f > 0 ? 1 : 0;
            // Phase bits enumerate sin/cos choices per active variable, sin
            // first; the bit for variable v lives at position v.
            const std::uint32_t combos = 1u << active;
            for (std::uint32_t c = 0; c < combos && non_constant < K; ++c) {
                std::uint32_t phases = 0;
                int slot = 0;
                for (int v = 0; v < n_vars; ++v) {
                    if (freq[v] > 0 && ((c >> slot++) & 1u)) phases |= 1u << v;
                }
                columns.push_back({freq, phases});
                ++non_constant;
            }
        });
        if (degree > K) break;  // unreachable guard against pathological K
    }
    return columns;
}

}  // namespace

std::string series_kind_name(SeriesKind kind) {
    switch (kind) {
        case SeriesKind::TrigComposed:
            return "trig_composed";
        case SeriesKind::TrigTensorGeneralized:
            return "trig_tensor_generalized";
        case SeriesKind::TargetedSpan:
            return "targeted_span";
    }
    throw ConfigError("unknown series kind");
}

SeriesKind series_kind_from_name(const std::string& name) {
    if (name == "trig_composed") return SeriesKind::TrigComposed;
    if (name == "trig_tensor_generalized") return SeriesKind::TrigTensorGeneralized;
    if (name == "targeted_span") return SeriesKind::TargetedSpan;
    throw ConfigError("unknown series kind: " + name);
}

int SeriesSpace::column_count() const {
    switch (kind) {
        case SeriesKind::TrigComposed:
            return K + 1;
        case SeriesKind::TrigTensorGeneralized:
            return static_cast<int>(tensor_columns.size());
        case SeriesKind::TargetedSpan:
            return 2;
    }
    return 0;
}

Eigen::RowVectorXd SeriesSpace::basis_row(const Eigen::RowVectorXd& x, int arm) const {
    if (kind == SeriesKind::TargetedSpan) {
        Eigen::RowVectorXd row(2);
        row[0] = init_fit->evaluate(x)[arm];
        row[1] = gradient_fit->evaluate(x)[arm];
        return row;
    }
    const double u = transforms[arm](init_fit->evaluate(x)[arm]);
    if (kind == SeriesKind::TrigComposed) {
        Eigen::RowVectorXd row(K + 1);
        row[0] = 1.0;
        for (int t = 1; t <= K; ++t) {
            const int j = (t + 1) / 2;
            row[t] = (t % 2 == 1) ? std::sin(kBasisPi * j * u) : std::cos(kBasisPi * j * u);
        }
        return row;
    }
    // TrigTensorGeneralized: variable 0 is u, variables 1..d the rescaled
    // covariates.
    Eigen::RowVectorXd vars(1 + x.size());
    vars[0] = u;
    for (Eigen::Index j = 0; j < x.size(); ++j) vars[j + 1] = x_transforms[j](x[j]);
    Eigen::RowVectorXd row(tensor_columns.size());
    for (std::size_t c = 0; c < tensor_columns.size(); ++c) {
        const TensorColumn& col = tensor_columns[c];
        double v = 1.0;
        for (std::size_t q = 0; q < col.freq.size(); ++q) {
            if (col.freq[q] == 0) continue;
            const double arg = kBasisPi * col.freq[q] * vars[q];
            v *= ((col.phases >> q) & 1u) ? std::cos(arg) : std::sin(arg);
        }
        row[c] = v;
    }
    return row;
}

SeriesSpace build_series_space(FittedFunctionPtr init, SeriesKind kind, int K, const Sample& s,
                               FittedFunctionPtr gradient_fit) {
    if (!init) throw ConfigError("series space requires an initial fit");
    if (K < 0) throw ConfigError("series K must be nonnegative");

    SeriesSpace space;
    space.kind = kind;
    space.K = K;
    space.init_fit = init;

    if (kind == SeriesKind::TargetedSpan) {
        if (!gradient_fit) throw ConfigError("targeted span requires a gradient fit");
        if (gradient_fit->arity() != init->arity())
            throw ConfigError("targeted span gradient fit must match the initial fit's arity");
        space.K = 2;
        space.gradient_fit = std::move(gradient_fit);
        return space;
    }

    const auto ranges = init->fitted_range();
    for (std::size_t a = 0; a < ranges.size(); ++a)
        space.transforms.push_back(padded_transform(ranges[a].first, ranges[a].second,
                                                    "initial fit"));

    if (kind == SeriesKind::TrigTensorGeneralized) {
        for (Eigen::Index j = 0; j < s.d(); ++j)
            space.x_transforms.push_back(
                padded_transform(s.x.col(j).minCoeff(), s.x.col(j).maxCoeff(), "covariate"));
        space.tensor_columns = enumerate_tensor_columns(1 + static_cast<int>(s.d()), K);
    }
    return space;
}

SeriesFit::SeriesFit(SeriesSpace space, Eigen::MatrixXd coefficients, double attained_risk,
                     std::vector<std::pair<double, double>> range, bool logistic)
    : space_(std::move(space)),
      coef_(std::move(coefficients)),
      attained_risk_(attained_risk),
      range_(std::move(range)),
      logistic_(logistic) {}

int SeriesFit::arity() const { return static_cast<int>(coef_.cols()); }

Eigen::VectorXd SeriesFit::evaluate(const Eigen::RowVectorXd& x) const {
    Eigen::VectorXd out(coef_.cols());
    for (Eigen::Index a = 0; a < coef_.cols(); ++a) {
        double v = space_.basis_row(x, static_cast<int>(a)) * coef_.col(a);
        if (logistic_) v = 1.0 / (1.0 + std::exp(-v));
        out[a] = v;
    }
    return out;
}

namespace {

Eigen::MatrixXd design_matrix(const SeriesSpace& space, const Sample& s, int arm) {
    Eigen::MatrixXd design(s.n(), space.column_count());
    for (Eigen::Index i = 0; i < s.n(); ++i) design.row(i) = space.basis_row(s.x.row(i), arm);
    return design;
}

// Column-pivoted QR on the design; rank-deficient designs fall back to
// ridge-jittered normal equations. Throws NumericError with a condition
// estimate when the Gram matrix stays singular even after the jitter.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    const Eigen::Index p = design.cols();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() == p) return qr.solve(y);
    Eigen::MatrixXd gram = design.transpose() * design;
    const double jitter = 1e-10 * gram.trace() / static_cast<double>(p);
    gram.diagonal().array() += jitter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        const auto svd = gram.jacobiSvd();
        const double cond = svd.singularValues()(0) /
                            std::max(svd.singularValues()(p - 1), 1e-300);
        std::ostringstream msg;
        msg << "series Gram matrix is singular after jitter (condition estimate " << cond << ")";
        throw NumericError(msg.str());
    }
    return ldlt.solve(design.transpose() * y);
}

double logistic_risk(const Eigen::VectorXd& eta, const Eigen::VectorXd& z) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double t = eta[i];
        const double l1p = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        total += -z[i] * t + l1p;
    }
    return total / static_cast<double>(z.size());
}

Eigen::VectorXd solve_logistic_newton(const Eigen::MatrixXd& design, const Eigen::VectorXd& z) {
    const Eigen::Index n = design.rows(), p = design.cols();
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
    double risk = logistic_risk(eta, z);
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::VectorXd prob(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            prob[i] = 1.0 / (1.0 + std::exp(-eta[i]));
            w[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-10);
        }
        const Eigen::VectorXd grad = design.transpose() * (prob - z) / static_cast<double>(n);
        if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
        Eigen::MatrixXd hess =
            design.transpose() * w.asDiagonal() * design / static_cast<double>(n);
        hess.diagonal().array() += 1e-10 * hess.trace() / static_cast<double>(p);
        const Eigen::VectorXd direction = hess.ldlt().solve(grad);
        double step = 1.0;
        bool improved = false;
        for (int half = 0; half < 30; ++half, step *= 0.5) {
            const Eigen::VectorXd trial = coef - step * direction;
            const Eigen::VectorXd trial_eta = design * trial;
            const double trial_risk = logistic_risk(trial_eta, z);
            if (trial_risk <= risk) {
                coef = trial;
                eta = trial_eta;
                improved = trial_risk < risk - 1e-14;
                risk = trial_risk;
                break;
            }
        }
        if (!improved) break;
    }
    return coef;
}

}  // namespace

std::shared_ptr<SeriesFit> fit_series(const SeriesSpace& space, const Sample& s,
                                      const Loss& loss) {
    s.validate();
    const int arms = loss.kind == LossKind::ArmSquaredError ? 2 : 1;
    if (space.init_fit->arity() < arms)
        throw ConfigError("series initial fit must provide one output per arm");
    const int p = space.column_count();
    if (p > s.n()) throw DataError("series has more columns than observations");

    Eigen::MatrixXd coef(p, arms);
    if (loss.kind == LossKind::ArmSquaredError) {
        if (!s.a) throw ConfigError("arm loss requires a treatment column");
        // The loss separates over arms: two independent least-squares fits.
        for (int arm = 0; arm < 2; ++arm) {
            std::vector<int> idx;
            for (Eigen::Index i = 0; i < s.n(); ++i)
                if ((*s.a)[i] == arm) idx.push_back(static_cast<int>(i));
            if (idx.empty()) throw DataError("both treatment arms must be nonempty");
            Sample arm_sample = s.subset(idx);
            coef.col(arm) = solve_normal_equations(design_matrix(space, arm_sample, arm),
                                                   arm_sample.z);
        }
    } else if (loss.kind == LossKind::SquaredError) {
        coef.col(0) = solve_normal_equations(design_matrix(space, s, 0), s.z);
    } else {
        coef.col(0) = solve_logistic_newton(design_matrix(space, s, 0), s.z);
    }

    // Attained risk and fitted range on the training rows.
    std::vector<std::pair<double, double>> range(
        arms, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
    Eigen::MatrixXd predictions(s.n(), arms);
    for (Eigen::Index i = 0; i < s.n(); ++i) {
        for (int arm = 0; arm < arms; ++arm) {
            double v = space.basis_row(s.x.row(i), arm) * coef.col(arm);
            if (loss.kind == LossKind::Logistic) v = 1.0 / (1.0 + std::exp(-v));
            predictions(i, arm) = v;
            range[arm].first = std::min(range[arm].first, v);
            range[arm].second = std::max(range[arm].second, v);
        }
    }
    double risk = 0.0;
    for (Eigen::Index i = 0; i < s.n(); ++i) {
        const int a = s.a ? (*s.a)[i] : 0;
        risk += loss.evaluate(predictions.row(i).transpose(), s.z[i], a);
    }
    risk /= static_cast<double>(s.n());

    return std::make_shared<SeriesFit>(space, std::move(coef), risk, std::move(range),
                                       loss.kind == LossKind::Logistic);
}

std::vector<int> default_k_grid(Eigen::Index n) {
    const int hi = std::min<Eigen::Index>(30, n / 10);
    std::vector<int> grid;
    for (int k = 0; k <= hi; ++k) grid.push_back(k);
    return grid;
}

std::pair<int, std::shared_ptr<SeriesFit>> select_K_cv(FittedFunctionPtr init, SeriesKind kind,
                                                       const std::vector<int>& K_grid,
                                                       const Sample& s, const Loss& loss,
                                                       const FoldPlan& plan,
                                                       std::vector<double>* cv_risks) {
    if (K_grid.empty()) throw ConfigError("K grid must be nonempty");
    if (!std::is_sorted(K_grid.begin(), K_grid.end()) ||
        std::adjacent_find(K_grid.begin(), K_grid.end()) != K_grid.end())
        throw ConfigError("K grid must be strictly increasing");

    if (cv_risks) cv_risks->clear();
    double best_risk = std::numeric_limits<double>::infinity();
    int best_K = K_grid.front();
    for (int K : K_grid) {
        const SeriesSpace space = build_series_space(init, kind, K, s);
        double total = 0.0;
        for (int fold = 0; fold < plan.k; ++fold) {
            const Sample train = s.subset(plan.train_indices(fold));
            const Sample test = s.subset(plan.test_indices(fold));
            std::shared_ptr<SeriesFit> fit;
            try {
                fit = fit_series(space, train, loss);
            } catch (const std::exception& e) {
                throw NumericError("series CV failed at K=" + std::to_string(K) + ", fold " +
                                   std::to_string(fold) + ": " + e.what());
            }
            total += empirical_risk(*fit, loss, test);
        }
        const double risk = total / static_cast<double>(plan.k);
        if (cv_risks) cv_risks->push_back(risk);
        if (risk < best_risk) {
            best_risk = risk;
            best_K = K;
        }
    }
    const SeriesSpace space = build_series_space(init, kind, best_K, s);
    return {best_K, fit_series(space, s, loss)};
}

void save_series_fit(const SeriesFit& fit, const std::string& path, const std::string& init_ref) {
    std::ofstream out(path);
    if (!out) throw ResourceError("cannot open " + path + " for writing");
    out << std::setprecision(17);
    const SeriesSpace& space = fit.space();
    out << "sievepi-seriesfit 1\n";
    out << "kind " << series_kind_name(space.kind) << "\n";
    out << "K " << space.K << "\n";
    out << "init_ref " << init_ref << "\n";
    out << "transforms " << space.transforms.size();
    for (const auto& t : space.transforms) out << " " << t.lo << " " << t.hi;
    out << "\n";
    out << "x_transforms " << space.x_transforms.size();
    for (const auto& t : space.x_transforms) out << " " << t.lo << " " << t.hi;
    out << "\n";
    out << "tensor_columns " << space.tensor_columns.size() << "\n";
    for (const auto& c : space.tensor_columns) {
        out << c.phases;
        for (int f : c.freq) out << " " << f;
        out << "\n";
    }
    out << "attained_risk " << fit.attained_risk() << "\n";
    out << "logistic " << (fit.evaluate_is_probability() ? 1 : 0) << "\n";
    const auto range = fit.fitted_range();
    out << "range " << range.size();
    for (const auto& r : range) out << " " << r.first << " " << r.second;
    out << "\n";
    out << "coefficients " << fit.coefficients().rows() << " " << fit.coefficients().cols()
        << "\n";
    for (Eigen::Index i = 0; i < fit.coefficients().rows(); ++i) {
        for (Eigen::Index j = 0; j < fit.coefficients().cols(); ++j)
            out << (j ? " " : "") << fit.coefficients()(i, j);
        out << "\n";
    }
    if (!out) throw ResourceError("failed writing " + path);
}

std::shared_ptr<SeriesFit> load_series_fit(const std::string& path, FittedFunctionPtr init,
                                           std::string* init_ref,
                                           FittedFunctionPtr gradient_fit) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot open " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "sievepi-seriesfit" || version != 1)
        throw DataError(path + " is not a series fit file");

    SeriesSpace space;
    space.init_fit = std::move(init);
    std::string key, kind_name, ref;
    in >> key >> kind_name;
    space.kind = series_kind_from_name(kind_name);
    in >> key >> space.K;
    in >> key >> ref;
    if (init_ref) *init_ref = ref;
    std::size_t count = 0;
    in >> key >> count;
    space.transforms.resize(count);
    for (auto& t : space.transforms) in >> t.lo >> t.hi;
    in >> key >> count;
    space.x_transforms.resize(count);
    for (auto& t : space.x_transforms) in >> t.lo >> t.hi;
    in >> key >> count;
    const int n_vars = 1 + static_cast<int>(space.x_transforms.size());
    space.tensor_columns.resize(count);
    for (auto& c : space.tensor_columns) {
        in >> c.phases;
        c.freq.resize(n_vars);
        for (int& f : c.freq) in >> f;
    }
    double risk = 0.0;
    in >> key >> risk;
    int logistic = 0;
    in >> key >> logistic;
    in >> key >> count;
    std::vector<std::pair<double, double>> range(count);
    for (auto& r : range) in >> r.first >> r.second;
    Eigen::Index rows = 0, cols = 0;
    in >> key >> rows >> cols;
    Eigen::MatrixXd coef(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) in >> coef(i, j);
    if (!in) throw DataError("truncated series fit file: " + path);

    if (space.kind == SeriesKind::TargetedSpan) {
        if (!gradient_fit) throw ConfigError("loading a targeted span requires the gradient fit");
        space.gradient_fit = std::move(gradient_fit);
    }
    return std::make_shared<SeriesFit>(std::move(space), std::move(coef), risk, std::move(range),
                                       logistic != 0);
}

}  // namespace sievepi
