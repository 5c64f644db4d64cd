#include "sievepi/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "sievepi/boosting.hpp"
#include "sievepi/errors.hpp"
#include "sievepi/folds.hpp"
#include "sievepi/hal.hpp"
#include "sievepi/kernel.hpp"
#include "sievepi/poly.hpp"
#include "sievepi/series.hpp"

namespace sievepi {

namespace {

// Memoizes evaluations of a univariate fit. The series K-grid CV evaluates
// the same initial fit at the same rows once per (K, fold), which is the
// dominant cost for kernel initial fits.
class CachedFit final : public FittedFunction {
public:
    explicit CachedFit(FittedFunctionPtr inner) : inner_(std::move(inner)) {}

    int arity() const override { return inner_->arity(); }
    Eigen::VectorXd evaluate(const Eigen::RowVectorXd& x) const override {
        if (x.size() != 1) return inner_->evaluate(x);
        auto it = cache_.find(x[0]);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(x[0], inner_->evaluate(x)).first->second;
    }
    std::vector<std::pair<double, double>> fitted_range() const override {
        return inner_->fitted_range();
    }

private:
    FittedFunctionPtr inner_;
    mutable std::unordered_map<double, Eigen::VectorXd> cache_;
};

FittedFunctionPtr cached(FittedFunctionPtr fit) {
    return std::make_shared<CachedFit>(std::move(fit));
}

// Smaller effective samples (per-arm fits, propensity) want shallower, less
// greedy trees than the scalar regression defaults.
BoostingConfig conservative_boosting() {
    BoostingConfig cfg;
    cfg.n_trees = 500;
    cfg.max_depth = 4;
    cfg.min_leaf = 10;
    return cfg;
}

// Fits shared between estimators run on the same replicate.
struct ReplicateContext {
    FittedFunctionPtr boost_fit;
    FittedFunctionPtr kernel_fit;
    FittedFunctionPtr propensity;
    std::shared_ptr<const HalBasis> hal_basis;
    double m_cv = -1.0;  // < 0: not yet selected
};

FittedFunctionPtr get_propensity(const Dgp& dgp, const Sample& s, std::uint64_t seed,
                                 const McConfig& cfg, ReplicateContext& ctx) {
    if (ctx.propensity) return ctx.propensity;
    if (cfg.use_true_propensity) {
        ctx.propensity = CallableFit::scalar(dgp.g0, 0.0, 1.0);
    } else {
        BoostingConfig bcfg = conservative_boosting();
        bcfg.seed = seed ^ 0x6a09e667f3bcc909ULL;
        ctx.propensity = cached(fit_boosting_propensity(s, bcfg));
    }
    return ctx.propensity;
}

FittedFunctionPtr get_boost_fit(const Dgp& dgp, const Sample& s, std::uint64_t seed,
                                ReplicateContext& ctx) {
    if (ctx.boost_fit) return ctx.boost_fit;
    BoostingConfig bcfg;
    bcfg.seed = seed ^ 0xbb67ae8584caa73bULL;
    if (dgp.has_treatment) {
        // each arm sees only about half the sample, so rein the trees in
        bcfg = conservative_boosting();
        bcfg.seed = seed ^ 0xbb67ae8584caa73bULL;
        ctx.boost_fit = cached(fit_boosting_arms(s, bcfg));
    } else {
        ctx.boost_fit = cached(fit_boosting(s, bcfg));
    }
    return ctx.boost_fit;
}

FittedFunctionPtr get_kernel_fit(const Dgp& dgp, const Sample& s, std::uint64_t seed,
                                 ReplicateContext& ctx) {
    if (ctx.kernel_fit) return ctx.kernel_fit;
    if (dgp.has_treatment) {
        std::vector<int> idx0, idx1;
        for (Eigen::Index i = 0; i < s.n(); ++i)
            ((*s.a)[i] == 1 ? idx1 : idx0).push_back(static_cast<int>(i));
        if (idx0.empty() || idx1.empty()) throw DataError("both treatment arms must be nonempty");
        Sample s0 = s.subset(idx0);
        s0.a.reset();
        Sample s1 = s.subset(idx1);
        s1.a.reset();
        const FoldPlan plan0 = make_folds(s0.n(), 10, seed ^ 0x3c6ef372fe94f82bULL);
        const FoldPlan plan1 = make_folds(s1.n(), 10, seed ^ 0xa54ff53a5f1d36f1ULL);
        ctx.kernel_fit = cached(
            combine_arms(fit_kernel_cv(s0, plan0), fit_kernel_cv(s1, plan1)));
    } else {
        const FoldPlan plan = make_folds(s.n(), 10, seed ^ 0x3c6ef372fe94f82bULL);
        ctx.kernel_fit = cached(fit_kernel_cv(s, plan));
    }
    return ctx.kernel_fit;
}

FittedFunctionPtr series_on_init(const FittedFunctionPtr& init, const Dgp& dgp, const Sample& s,
                                 std::uint64_t seed, const McConfig& cfg) {
    const SeriesKind kind =
        dgp.has_treatment ? SeriesKind::TrigTensorGeneralized : SeriesKind::TrigComposed;
    const Loss loss{dgp.has_treatment ? LossKind::ArmSquaredError : LossKind::SquaredError};
    if (cfg.fixed_K >= 0) {
        const SeriesSpace space = build_series_space(init, kind, cfg.fixed_K, s);
        return fit_series(space, s, loss);
    }
    const FoldPlan plan = make_folds(s.n(), 10, seed ^ 0x510e527fade682d1ULL);
    return select_K_cv(init, kind, default_k_grid(s.n()), s, loss, plan).second;
}

EstimateReport run_estimator_ctx(const std::string& name, const Dgp& dgp, const Sample& s,
                                 std::uint64_t seed, const McConfig& cfg, ReplicateContext& ctx,
                                 double* selected_bound) {
    const Summary& summary = dgp.summary;
    const Loss sq{LossKind::SquaredError};

    if (name == "M.cv" || name == "M.gcv" || name == "M.gcv+" || name == "M.oracle") {
        if (dgp.has_treatment)
            throw ConfigError("HAL bound estimators are defined for scalar DGPs");
        if (!ctx.hal_basis)
            ctx.hal_basis = std::make_shared<HalBasis>(build_hal_basis(s, 1));
        double M;
        if (name == "M.oracle") {
            if (dgp.theta0_varnorm <= 0.0)
                throw ConfigError("M.oracle needs the DGP's variation norm");
            // Lemma-style bound for Psi = P0 theta^2: (B+1) ||theta0||_v, B=2.
            M = 3.0 * dgp.theta0_varnorm;
        } else {
            if (ctx.m_cv < 0.0) {
                const FoldPlan plan = make_folds(s.n(), 10, seed ^ 0x9b05688c2b3e6c1fULL);
                ctx.m_cv = select_M_cv(s, sq, default_m_grid(s), plan).selected_M;
            }
            M = name == "M.cv" ? ctx.m_cv : (name == "M.gcv" ? 3.0 : 3.1) * ctx.m_cv;
        }
        if (selected_bound) *selected_bound = M;
        const auto fit = fit_hal(s, sq, M, ctx.hal_basis);
        return plug_in(summary, *fit, s);
    }

    FittedFunctionPtr propensity;
    if (summary.needs_propensity()) propensity = get_propensity(dgp, s, seed, cfg, ctx);

    if (name == "poly") {
        FittedFunctionPtr fit;
        if (dgp.has_treatment) {
            std::vector<int> idx0, idx1;
            for (Eigen::Index i = 0; i < s.n(); ++i)
                ((*s.a)[i] == 1 ? idx1 : idx0).push_back(static_cast<int>(i));
            if (idx0.empty() || idx1.empty())
                throw DataError("both treatment arms must be nonempty");
            Sample s0 = s.subset(idx0);
            s0.a.reset();
            Sample s1 = s.subset(idx1);
            s1.a.reset();
            fit = combine_arms(
                fit_poly_cv(s0, make_folds(s0.n(), 10, seed ^ 0x1f83d9abfb41bd6bULL)),
                fit_poly_cv(s1, make_folds(s1.n(), 10, seed ^ 0x5be0cd19137e2179ULL)));
        } else {
            fit = fit_poly_cv(s, make_folds(s.n(), 10, seed ^ 0x1f83d9abfb41bd6bULL));
        }
        return plug_in(summary, *fit, s, propensity);
    }
    if (name == "xgb") {
        return plug_in(summary, *get_boost_fit(dgp, s, seed, ctx), s, propensity);
    }
    if (name == "xgb.1step") {
        return one_step(summary, *get_boost_fit(dgp, s, seed, ctx), s, propensity);
    }
    if (name == "xgb.trig") {
        const auto series =
            series_on_init(get_boost_fit(dgp, s, seed, ctx), dgp, s, seed, cfg);
        return plug_in(summary, *series, s, propensity);
    }
    if (name == "ker.trig") {
        const auto series =
            series_on_init(get_kernel_fit(dgp, s, seed, ctx), dgp, s, seed, cfg);
        return plug_in(summary, *series, s, propensity);
    }
    throw ConfigError("unknown estimator: " + name);
}

}  // namespace

std::vector<std::string> estimator_roster_for(DgpKind kind) {
    switch (kind) {
        case DgpKind::HalExp:
            return {"M.cv", "M.gcv", "M.gcv+", "M.oracle"};
        case DgpKind::StepTrig:
        case DgpKind::HteStep:
            return {"poly", "xgb", "xgb.1step", "xgb.trig"};
        case DgpKind::RoughF:
        case DgpKind::HteRoughG:
            return {"ker.trig"};
        case DgpKind::ConstantTest:
            return {"poly"};
    }
    throw ConfigError("unknown DGP kind");
}

EstimateReport run_estimator(const std::string& name, const Dgp& dgp, const Sample& s,
                             std::uint64_t seed, const McConfig& cfg, double* selected_bound) {
    ReplicateContext ctx;
    return run_estimator_ctx(name, dgp, s, seed, cfg, ctx, selected_bound);
}

McResult run_monte_carlo(const McConfig& cfg, const McProgress& progress) {
    if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
    if (cfg.n_grid.empty()) throw ConfigError("n grid must be nonempty");
    const Dgp dgp = Dgp::make(cfg.dgp);
    const std::vector<std::string> roster =
        cfg.roster.empty() ? estimator_roster_for(cfg.dgp) : cfg.roster;

    const TrueTargets targets = true_targets(dgp);
    McResult result;
    result.dgp = cfg.dgp;
    result.psi_true = targets.psi;
    result.xi2_true = targets.xi2;

    for (const Eigen::Index n : cfg.n_grid) {
        std::vector<McCell> cells(roster.size());
        std::vector<int> covered(roster.size(), 0);
        for (std::size_t e = 0; e < roster.size(); ++e) {
            cells[e].estimator = roster[e];
            cells[e].n = n;
            cells[e].trimmed = cfg.trim;
        }

        for (int r = 0; r < cfg.replicates; ++r) {
            const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(r);
            const Sample s = sample_dgp(dgp, n, seed);
            ReplicateContext ctx;
            for (std::size_t e = 0; e < roster.size(); ++e) {
                try {
                    double bound = -1.0;
                    const EstimateReport report =
                        run_estimator_ctx(roster[e], dgp, s, seed, cfg, ctx, &bound);
                    cells[e].estimates.push_back(report.psi_hat);
                    if (bound >= 0.0) cells[e].selected_bounds.push_back(bound);
                    if (report.ci_lo <= targets.psi && targets.psi <= report.ci_hi)
                        ++covered[e];
                    ++cells[e].replicates_done;
                } catch (const std::exception& err) {
                    ++cells[e].failures;
                    if (progress)
                        progress("replicate " + std::to_string(r) + " " + roster[e] +
                                 " failed: " + err.what());
                }
            }
            if (progress && (r + 1) % 10 == 0)
                progress("n=" + std::to_string(n) + " replicate " + std::to_string(r + 1) + "/" +
                         std::to_string(cfg.replicates));
        }

        for (std::size_t e = 0; e < roster.size(); ++e) {
            McCell& cell = cells[e];
            if (cell.failures > cfg.failure_cap * cfg.replicates)
                throw NumericError(cell.estimator + " failed on " +
                                   std::to_string(cell.failures) + "/" +
                                   std::to_string(cfg.replicates) + " replicates at n=" +
                                   std::to_string(n));
            if (cell.replicates_done == 0) continue;

            std::vector<double> estimates = cell.estimates;
            if (cfg.trim && estimates.size() > 2) {
                // Most extreme 1% of runs overall: 0.5% from each tail.
                std::sort(estimates.begin(), estimates.end());
                const auto t = static_cast<std::size_t>(
                    std::llround(0.005 * static_cast<double>(estimates.size())));
                if (t > 0 && estimates.size() > 2 * t)
                    estimates = std::vector<double>(estimates.begin() + t, estimates.end() - t);
            }
            double bias = 0.0, mse = 0.0;
            for (double psi : estimates) {
                bias += psi - targets.psi;
                mse += (psi - targets.psi) * (psi - targets.psi);
            }
            bias /= static_cast<double>(estimates.size());
            mse /= static_cast<double>(estimates.size());

            const double nn = static_cast<double>(n);
            const double p = static_cast<double>(covered[e]) / cell.replicates_done;
            cell.relative_mse = nn * mse / targets.xi2;
            cell.rel_abs_bias = std::sqrt(nn) * std::abs(bias / targets.psi);
            cell.coverage = p;
            cell.coverage_mc_se = std::sqrt(p * (1.0 - p) / cell.replicates_done);
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

std::string McResult::csv_header() {
    return "dgp,estimator,n,replicates,relative_mse,rel_abs_bias,coverage,coverage_mc_se,trimmed";
}

std::string McResult::csv() const {
    std::ostringstream out;
    out << csv_header() << '\n' << std::setprecision(10);
    for (const McCell& cell : cells) {
        out << dgp_kind_name(dgp) << ',' << cell.estimator << ',' << cell.n << ','
            << cell.replicates_done << ',' << cell.relative_mse << ',' << cell.rel_abs_bias << ','
            << cell.coverage << ',' << cell.coverage_mc_se << ',' << (cell.trimmed ? 1 : 0)
            << '\n';
    }
    return out.str();
}

}  // namespace sievepi
