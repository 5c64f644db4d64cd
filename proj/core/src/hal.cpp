#include "sievepi/hal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "sievepi/errors.hpp"

namespace sievepi {

namespace {

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
    return r;
}

}  // namespace

HalBasis build_hal_basis(const Sample& s, int max_interaction, std::size_t column_cap) {
    const int d = static_cast<int>(s.d());
    const int n = static_cast<int>(s.n());
    if (max_interaction < 1 || max_interaction > d)
        throw ConfigError("max_interaction must be in [1, d], got " +
                          std::to_string(max_interaction));

    std::uint64_t subset_count = 0;
    for (int m = 1; m <= max_interaction; ++m) subset_count += binomial(d, m);
    const std::uint64_t total = subset_count * static_cast<std::uint64_t>(n);
    if (total > column_cap)
        throw ResourceError("HAL basis would have " + std::to_string(total) +
                            " columns, above the cap of " + std::to_string(column_cap));

    HalBasis basis;
    basis.knots = s.x;
    basis.d = d;
    basis.max_interaction = max_interaction;

    // Enumerate subsets by increasing popcount-agnostic mask order and dedup
    // columns that agree on the coordinates in s (tied covariate values).
    std::map<std::pair<std::uint32_t, std::vector<double>>, int> seen;
    for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
        if (std::popcount(mask) > max_interaction) continue;
        for (int j = 0; j < n; ++j) {
            std::vector<double> key;
            for (int c = 0; c < d; ++c)
                if ((mask >> c) & 1u) key.push_back(s.x(j, c));
            auto [it, inserted] = seen.try_emplace({mask, std::move(key)}, 0);
            if (inserted) basis.columns.push_back({mask, j});
        }
    }
    return basis;
}

// ---------------------------------------------------------------------------
// Coordinate-descent lasso over sparse indicator columns, with an outer
// bisection on the penalty so the attained l1 norm (intercept included)
// lands on the requested bound.
namespace {

struct LassoProblem {
    int n = 0;
    std::vector<std::vector<int>> cols;  // row lists where the indicator is 1
    Eigen::VectorXd y;                   // response (or IRLS working response)
    Eigen::VectorXd w;                   // observation weights, mean ~ 1
};

struct LassoState {
    double beta0 = 0.0;
    Eigen::VectorXd beta;
    Eigen::VectorXd resid;  // y - eta

    double l1() const { return std::abs(beta0) + beta.cwiseAbs().sum(); }
};

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

class LassoSolver {
public:
    LassoSolver(const LassoProblem& prob, const HalSolverOptions& opts)
        : p_(prob), opts_(opts) {
        const int pcols = static_cast<int>(p_.cols.size());
        col_scale_.resize(pcols);
        for (int j = 0; j < pcols; ++j) {
            double sw = 0.0;
            for (int i : p_.cols[j]) sw += p_.w[i];
            col_scale_[j] = sw / p_.n;
        }
        intercept_scale_ = p_.w.sum() / p_.n;
        double mean = p_.y.dot(p_.w) / p_.w.sum();
        scale_ = std::max(1.0, std::sqrt((p_.y.array() - mean).square().matrix().dot(p_.w) /
                                         p_.w.sum()));
        build_chain();
    }

    // With one covariate the deduped indicator columns are nested: sorting the
    // rows by membership count turns every column into a suffix of the order,
    // so a full CD sweep runs in O(n) with lazily materialized residual
    // updates instead of O(sum of column sizes). Detection is structural
    // (distinct suffix position sums force set equality), so any nested basis
    // qualifies and anything else falls back to the generic sweep.
    void build_chain() {
        const int n = p_.n;
        const int pcols = static_cast<int>(p_.cols.size());
        if (pcols == 0 || n <= 0) return;
        std::vector<int> cnt(n, 0);
        for (const auto& c : p_.cols)
            for (int i : c) ++cnt[i];
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cnt[a] < cnt[b]; });
        std::vector<int> pos(n);
        for (int k = 0; k < n; ++k) pos[order[k]] = k;
        std::vector<int> q(pcols);
        for (int j = 0; j < pcols; ++j) {
            const auto& c = p_.cols[j];
            const int qj = n - static_cast<int>(c.size());
            long long sum = 0;
            for (int i : c) sum += pos[i];
            // distinct positions summing to the maximum for this count ⇒ the
            // column is exactly the suffix [qj, n)
            const long long want =
                static_cast<long long>(n - 1 + qj) * static_cast<long long>(n - qj) / 2;
            if (sum != want) return;
            q[j] = qj;
        }
        col_q_ = std::move(q);
        row_order_ = std::move(order);
        chain_cols_.resize(pcols);
        std::iota(chain_cols_.begin(), chain_cols_.end(), 0);
        std::sort(chain_cols_.begin(), chain_cols_.end(),
                  [&](int a, int b) { return col_q_[a] > col_q_[b]; });
        suffix_w_.assign(n + 1, 0.0);
        for (int k = n - 1; k >= 0; --k) suffix_w_[k] = suffix_w_[k + 1] + p_.w[row_order_[k]];
        qdelta_.assign(n, 0.0);
        chain_ = true;
    }

    double lambda_max(const LassoState& st) const {
        double lm = 2.0 * std::abs(st.resid.dot(p_.w)) / p_.n;
        for (std::size_t j = 0; j < p_.cols.size(); ++j) {
            double dot = 0.0;
            for (int i : p_.cols[j]) dot += p_.w[i] * st.resid[i];
            lm = std::max(lm, 2.0 * std::abs(dot) / p_.n);
        }
        return lm;
    }

    double update_intercept(double lambda, LassoState& st) const {
        const double s = intercept_scale_;
        const double rho = st.resid.dot(p_.w) / p_.n + st.beta0 * s;
        const double nb = soft_threshold(rho, lambda / 2.0) / s;
        const double delta = nb - st.beta0;
        if (delta != 0.0) {
            st.resid.array() -= delta;
            st.beta0 = nb;
            return std::abs(delta) * std::sqrt(s);
        }
        return 0.0;
    }

    double sweep_generic(double lambda, LassoState& st, std::vector<char>& active,
                         bool full) const {
        const int pcols = static_cast<int>(p_.cols.size());
        double maxdelta = update_intercept(lambda, st);
        for (int j = 0; j < pcols; ++j) {
            if (!full && !active[j]) continue;
            const double s = col_scale_[j];
            if (s <= 0.0) continue;
            double dot = 0.0;
            for (int i : p_.cols[j]) dot += p_.w[i] * st.resid[i];
            const double rho = dot / p_.n + st.beta[j] * s;
            const double nb = soft_threshold(rho, lambda / 2.0) / s;
            const double delta = nb - st.beta[j];
            if (delta != 0.0) {
                for (int i : p_.cols[j]) st.resid[i] -= delta;
                st.beta[j] = nb;
                maxdelta = std::max(maxdelta, std::abs(delta) * std::sqrt(s));
                if (nb != 0.0) active[j] = 1;
            }
        }
        return maxdelta;
    }

    // One CD pass over the nested columns in decreasing-suffix order. T holds
    // the weighted residual sum over the rows scanned so far; an update of
    // delta on suffix [q, n) shifts every later column's dot by
    // delta * suffix_w_[q], so residuals are materialized only once at the
    // end of the pass via a prefix over the per-suffix deltas.
    double sweep_chain(double lambda, LassoState& st, std::vector<char>& active, bool full) const {
        const int n = p_.n;
        double maxdelta = update_intercept(lambda, st);
        double T = 0.0;
        int k = n - 1;
        bool any = false;
        for (int j : chain_cols_) {
            const int qj = col_q_[j];
            while (k >= qj) {
                T += p_.w[row_order_[k]] * st.resid[row_order_[k]];
                --k;
            }
            if (!full && !active[j]) continue;
            const double s = col_scale_[j];
            if (s <= 0.0) continue;
            const double rho = T / p_.n + st.beta[j] * s;
            const double nb = soft_threshold(rho, lambda / 2.0) / s;
            const double delta = nb - st.beta[j];
            if (delta != 0.0) {
                st.beta[j] = nb;
                T -= delta * suffix_w_[qj];
                qdelta_[qj] += delta;
                any = true;
                maxdelta = std::max(maxdelta, std::abs(delta) * std::sqrt(s));
                if (nb != 0.0) active[j] = 1;
            }
        }
        if (any) {
            double run = 0.0;
            for (int kk = 0; kk < n; ++kk) {
                run += qdelta_[kk];
                qdelta_[kk] = 0.0;
                if (run != 0.0) st.resid[row_order_[kk]] -= run;
            }
        }
        return maxdelta;
    }

    // CD to convergence at fixed lambda; state is warm-started in place.
    void solve(double lambda, LassoState& st) const {
        const int pcols = static_cast<int>(p_.cols.size());
        const double tol = opts_.coord_tol * scale_;
        int sweeps = 0;
        std::vector<char> active(pcols, 0);
        for (int j = 0; j < pcols; ++j) active[j] = st.beta[j] != 0.0;

        const auto sweep = [&](bool full) {
            return chain_ ? sweep_chain(lambda, st, active, full)
                          : sweep_generic(lambda, st, active, full);
        };
        // Coordinate updates can stall on near-collinear indicator columns
        // (tiny per-sweep deltas, no objective progress), so convergence is
        // also declared once the objective stops improving.
        const auto objective = [&]() {
            return st.resid.cwiseAbs2().dot(p_.w) / p_.n + lambda * st.l1();
        };
        const double obj_rel_tol = 1e-8;
        double prev_obj = std::numeric_limits<double>::infinity();
        while (true) {
            const double maxdelta = sweep(true);
            if (++sweeps > opts_.max_sweeps) {
                if (maxdelta < 1e4 * tol) return;
                throw NumericError("HAL coordinate descent did not converge; last update " +
                                   std::to_string(maxdelta));
            }
            const double obj = objective();
            if (maxdelta < tol || obj > prev_obj - obj_rel_tol * std::abs(obj)) return;
            prev_obj = obj;
            // active-set sweeps until stable, then recheck all
            double prev_inner = prev_obj;
            while (true) {
                const double inner_delta = sweep(false);
                if (++sweeps > opts_.max_sweeps) {
                    if (inner_delta < 1e4 * tol) return;
                    throw NumericError("HAL coordinate descent did not converge; last update " +
                                       std::to_string(inner_delta));
                }
                const double inner_obj = objective();
                if (inner_delta < tol ||
                    inner_obj > prev_inner - obj_rel_tol * std::abs(inner_obj))
                    break;
                prev_inner = inner_obj;
            }
        }
    }

    // Finds the state whose l1 norm meets the bound M: either the penalty is
    // inactive (l1 <= M at a negligible penalty) or lambda is bisected until
    // l1 is within the relative tolerance below M. The descent down the
    // penalty path is cached so repeated calls (CV over a candidate grid)
    // only pay for a local bisection.
    void solve_with_bound(double M, LassoState& st) {
        if (M <= 0.0) {
            st.beta0 = 0.0;
            st.beta.setZero();
            st.resid = p_.y;
            return;
        }
        if (path_.empty()) {
            LassoState zero;
            zero.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p_.cols.size()));
            zero.resid = p_.y;
            lmax_ = lambda_max(zero);
            if (lmax_ <= 0.0) {
                st = zero;
                return;
            }
            path_.emplace_back(lmax_, zero);
        }
        const double lmin = lmax_ * opts_.lambda_min_ratio;

        // Extend the cached geometric descent until the constraint is active
        // for this M, the penalty is negligible, or the attained norm has
        // saturated (the unpenalized solution was reached, so larger bounds
        // are slack and further descent only burns sweeps).
        while (path_.back().second.l1() <= M && path_.back().first > lmin && !saturated_) {
            LassoState next = path_.back().second;
            const double lambda = path_.back().first * 0.7;
            solve(lambda, next);
            const double prev_l1 = path_.back().second.l1();
            if (next.l1() <= prev_l1 * (1.0 + 1e-6) + 1e-12) saturated_ = true;
            path_.emplace_back(lambda, std::move(next));
        }

        // If the smallest cached penalty still leaves the constraint slack
        // (including a saturated stop above lambda_min), polish once at the
        // floor so the returned fit is numerically unpenalized.
        if (path_.back().second.l1() <= M && path_.back().first > lmin * (1.0 + 1e-9)) {
            LassoState polished = path_.back().second;
            solve(lmin, polished);
            path_.emplace_back(lmin, std::move(polished));
        }

        // Last cached point with l1 <= M brackets the bound from above.
        std::size_t hi = 0;
        bool found_lo = false;
        std::size_t lo = 0;
        for (std::size_t i = 0; i < path_.size(); ++i) {
            if (path_[i].second.l1() <= M) {
                hi = i;
            } else {
                lo = i;
                found_lo = true;
                break;
            }
        }
        if (!found_lo) {
            // Constraint slack at (numerically) zero penalty.
            st = path_.back().second;
            return;
        }

        double lambda_hi = path_[hi].first;  // l1 <= M
        double lambda_lo = path_[lo].first;  // l1 > M
        LassoState hi_state = path_[hi].second;
        LassoState lo_state = path_[lo].second;
        st = hi_state;
        for (int it = 0; it < opts_.max_bisection_iters; ++it) {
            if (hi_state.l1() >= M * (1.0 - opts_.constraint_rel_tol)) break;
            const double mid = std::sqrt(lambda_lo * lambda_hi);
            solve(mid, st);
            const double l1 = st.l1();
            if (l1 > M) {
                lambda_lo = mid;
                lo_state = st;
                st = hi_state;  // restart the next probe from the feasible side
            } else {
                lambda_hi = mid;
                hi_state = st;
            }
        }
        // The bound can sit at a kink of the (piecewise linear) penalty path,
        // where the attained norm jumps across M and no lambda reaches the
        // tolerance. The two bracket states then share an active set, so the
        // exact path point with l1 = M is their linear interpolation.
        if (hi_state.l1() < M * (1.0 - opts_.constraint_rel_tol) &&
            lo_state.l1() > hi_state.l1()) {
            const double t = (M - hi_state.l1()) / (lo_state.l1() - hi_state.l1());
            LassoState mix;
            mix.beta0 = hi_state.beta0 + t * (lo_state.beta0 - hi_state.beta0);
            mix.beta = hi_state.beta + t * (lo_state.beta - hi_state.beta);
            mix.resid = hi_state.resid + t * (lo_state.resid - hi_state.resid);
            double l1 = mix.l1();
            if (l1 > M) {  // sign flips or rounding: rescale back into the ball
                const double shrink = M / l1;
                mix.beta0 *= shrink;
                mix.beta *= shrink;
                mix.resid = p_.y - mix.resid;  // X beta before rescale
                mix.resid = p_.y - shrink * mix.resid;
                l1 = M;
            }
            const double mix_obj = mix.resid.cwiseAbs2().dot(p_.w);
            const double hi_obj = hi_state.resid.cwiseAbs2().dot(p_.w);
            if (l1 >= M * (1.0 - opts_.constraint_rel_tol) && l1 <= M && mix_obj <= hi_obj)
                hi_state = std::move(mix);
        }
        st = hi_state;  // feasible: l1 <= M
    }

private:
    const LassoProblem& p_;
    const HalSolverOptions& opts_;
    std::vector<double> col_scale_;
    double intercept_scale_ = 1.0;
    double scale_ = 1.0;
    double lmax_ = 0.0;
    bool saturated_ = false;
    std::vector<std::pair<double, LassoState>> path_;  // descending lambda

    // chain fast path (nested columns; see build_chain)
    bool chain_ = false;
    std::vector<int> row_order_;
    std::vector<int> col_q_;
    std::vector<int> chain_cols_;
    std::vector<double> suffix_w_;
    mutable std::vector<double> qdelta_;
};

LassoProblem make_problem(const Sample& s, const HalBasis& basis) {
    LassoProblem prob;
    prob.n = static_cast<int>(s.n());
    prob.y = s.z;
    prob.w = Eigen::VectorXd::Ones(prob.n);
    prob.cols.resize(basis.column_count());
    for (std::size_t c = 0; c < basis.column_count(); ++c) {
        for (int i = 0; i < prob.n; ++i)
            if (basis.evaluate_column(c, s.x.row(i)) > 0.5) prob.cols[c].push_back(i);
    }
    return prob;
}

std::vector<std::pair<std::size_t, double>> sparse_betas(const LassoState& st) {
    std::vector<std::pair<std::size_t, double>> out;
    for (Eigen::Index j = 0; j < st.beta.size(); ++j)
        if (st.beta[j] != 0.0) out.emplace_back(static_cast<std::size_t>(j), st.beta[j]);
    return out;
}

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

HalFit::HalFit(std::shared_ptr<const HalBasis> basis, double beta0,
               std::vector<std::pair<std::size_t, double>> betas, double bound_M, LossKind loss)
    : basis_(std::move(basis)),
      beta0_(beta0),
      betas_(std::move(betas)),
      bound_M_(bound_M),
      loss_(loss) {}

Eigen::VectorXd HalFit::evaluate(const Eigen::RowVectorXd& x) const {
    double v = beta0_;
    for (const auto& [c, b] : betas_) v += b * basis_->evaluate_column(c, x);
    return Eigen::VectorXd::Constant(1, v);
}

std::vector<std::pair<double, double>> HalFit::fitted_range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < basis_->knots.rows(); ++i) {
        const double v = evaluate(basis_->knots.row(i))[0];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {{lo, hi}};
}

double HalFit::attained_l1() const {
    double s = std::abs(beta0_);
    for (const auto& [c, b] : betas_) s += std::abs(b);
    return s;
}

double variation_norm(const HalFit& fit) { return fit.attained_l1(); }

std::shared_ptr<HalFit> fit_hal(const Sample& s, const Loss& loss, double M,
                                std::shared_ptr<const HalBasis> basis,
                                const HalSolverOptions& opts) {
    if (M < 0.0) throw ConfigError("variation-norm bound must be nonnegative");
    if (loss.kind == LossKind::ArmSquaredError)
        throw ConfigError("use fit_hal_arms for the arm squared-error loss");

    LassoProblem prob = make_problem(s, *basis);
    LassoState st;
    st.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prob.cols.size()));
    st.resid = prob.y;

    if (loss.kind == LossKind::SquaredError) {
        LassoSolver solver(prob, opts);
        solver.solve_with_bound(M, st);
        return std::make_shared<HalFit>(basis, st.beta0, sparse_betas(st), M, loss.kind);
    }

    // Logistic: iteratively reweighted CD with the same outer bisection.
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(prob.n);
    double prev_change = std::numeric_limits<double>::infinity();
    for (int irls = 0; irls < opts.max_irls_iters; ++irls) {
        Eigen::VectorXd pvec(prob.n), wvec(prob.n), yw(prob.n);
        for (int i = 0; i < prob.n; ++i) {
            const double p = expit(eta[i]);
            const double w = std::max(p * (1.0 - p), 1e-5);
            pvec[i] = p;
            wvec[i] = w;
            yw[i] = eta[i] + (s.z[i] - p) / w;
        }
        LassoProblem wp = prob;
        wp.y = yw;
        wp.w = wvec;
        LassoState wst = st;
        wst.resid = yw;
        wst.resid.array() -= wst.beta0;
        for (std::size_t j = 0; j < wp.cols.size(); ++j)
            if (wst.beta[j] != 0.0)
                for (int i : wp.cols[j]) wst.resid[i] -= wst.beta[j];
        LassoSolver solver(wp, opts);
        solver.solve_with_bound(M, wst);

        Eigen::VectorXd new_eta = Eigen::VectorXd::Constant(prob.n, wst.beta0);
        for (std::size_t j = 0; j < wp.cols.size(); ++j)
            if (wst.beta[j] != 0.0)
                for (int i : wp.cols[j]) new_eta[i] += wst.beta[j];
        const double change = (new_eta - eta).cwiseAbs().maxCoeff();
        eta = new_eta;
        st = wst;
        if (change < 1e-8) break;
        if (irls == opts.max_irls_iters - 1 && change > 1e-3 && change > prev_change)
            throw NumericError("HAL logistic IRLS did not converge; last change " +
                               std::to_string(change));
        prev_change = change;
    }
    return std::make_shared<HalFit>(basis, st.beta0, sparse_betas(st), M, loss.kind);
}

std::shared_ptr<HalFit> fit_hal(const Sample& s, const Loss& loss, double M, const HalBasis& basis,
                                const HalSolverOptions& opts) {
    return fit_hal(s, loss, M, std::make_shared<HalBasis>(basis), opts);
}

namespace {

// Two independent scalar HAL fits presented as one arity-2 function.
class ArmHalFit final : public FittedFunction {
public:
    ArmHalFit(std::shared_ptr<HalFit> arm0, std::shared_ptr<HalFit> arm1)
        : arm0_(std::move(arm0)), arm1_(std::move(arm1)) {}
    int arity() const override { return 2; }
    Eigen::VectorXd evaluate(const Eigen::RowVectorXd& x) const override {
        Eigen::VectorXd out(2);
        out[0] = arm0_->evaluate(x)[0];
        out[1] = arm1_->evaluate(x)[0];
        return out;
    }
    std::vector<std::pair<double, double>> fitted_range() const override {
        return {arm0_->fitted_range()[0], arm1_->fitted_range()[0]};
    }

private:
    std::shared_ptr<HalFit> arm0_, arm1_;
};

}  // namespace

FittedFunctionPtr fit_hal_arms(const Sample& s, double M0, double M1, int max_interaction,
                               const HalSolverOptions& opts) {
    if (!s.a) throw ConfigError("fit_hal_arms requires a treatment column");
    std::vector<int> idx0, idx1;
    for (Eigen::Index i = 0; i < s.n(); ++i) ((*s.a)[i] == 1 ? idx1 : idx0).push_back(i);
    if (idx0.empty() || idx1.empty()) throw DataError("both treatment arms must be nonempty");
    const Loss sq{LossKind::SquaredError};
    Sample s0 = s.subset(idx0);
    s0.a.reset();
    Sample s1 = s.subset(idx1);
    s1.a.reset();
    auto f0 = fit_hal(s0, sq, M0, build_hal_basis(s0, max_interaction), opts);
    auto f1 = fit_hal(s1, sq, M1, build_hal_basis(s1, max_interaction), opts);
    return std::make_shared<ArmHalFit>(std::move(f0), std::move(f1));
}

std::vector<double> default_m_grid(const Sample& s, int count) {
    const double range = s.z.maxCoeff() - s.z.minCoeff();
    const double lo = 0.001;
    const double hi = std::max(20.0 * range, lo * 10.0);
    std::vector<double> grid(count);
    for (int i = 0; i < count; ++i)
        grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
    return grid;
}

BoundSelection select_M_cv(const Sample& s, const Loss& loss, const std::vector<double>& candidates,
                           const FoldPlan& plan, int max_interaction,
                           const HalSolverOptions& opts) {
    if (candidates.empty()) throw ConfigError("candidate bound grid must be nonempty");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i] <= 0.0) throw ConfigError("candidate bounds must be positive");
        if (i > 0 && candidates[i] <= candidates[i - 1])
            throw ConfigError("candidate bounds must be strictly increasing");
    }
    if (loss.kind == LossKind::ArmSquaredError)
        throw ConfigError("select bounds per arm for the arm squared-error loss");

    std::vector<double> risks(candidates.size(), 0.0);
    for (int fold = 0; fold < plan.k; ++fold) {
        const Sample train = s.subset(plan.train_indices(fold));
        const Sample test = s.subset(plan.test_indices(fold));
        auto basis = std::make_shared<HalBasis>(build_hal_basis(train, max_interaction));

        if (loss.kind == LossKind::SquaredError) {
            // Candidates are visited in increasing order so the lasso state
            // can be warm-started down the penalty path.
            LassoProblem prob = make_problem(train, *basis);
            LassoSolver solver(prob, opts);
            LassoState st;
            st.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prob.cols.size()));
            st.resid = prob.y;
            for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
                solver.solve_with_bound(candidates[ci], st);
                HalFit fit(basis, st.beta0, sparse_betas(st), candidates[ci], loss.kind);
                risks[ci] += empirical_risk(fit, loss, test) / plan.k;
            }
        } else {
            for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
                auto fit = fit_hal(train, loss, candidates[ci], basis, opts);
                risks[ci] += empirical_risk(*fit, loss, test) / plan.k;
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t ci = 1; ci < candidates.size(); ++ci)
        if (risks[ci] < risks[best]) best = ci;  // strict: ties keep the smaller M

    BoundSelection sel;
    sel.strategy = BoundStrategy::Cv;
    sel.selected_M = candidates[best];
    sel.base_M = candidates[best];
    sel.candidates = candidates;
    sel.cv_risks = risks;
    return sel;
}

BoundSelection enlarge_M(const BoundSelection& cv_selection,
                         const std::function<double(const std::vector<double>&)>& F,
                         const std::vector<double>& component_Ms, double epsilon,
                         bool multiplicative) {
    if (epsilon < 0.0) throw ConfigError("epsilon must be nonnegative");
    BoundSelection sel = cv_selection;
    sel.strategy = epsilon > 0.0 ? BoundStrategy::GcvRelaxed : BoundStrategy::Gcv;
    sel.epsilon = epsilon;
    sel.multiplicative = multiplicative;
    sel.component_Ms = component_Ms;
    std::vector<double> relaxed(component_Ms.size());
    double base;
    if (multiplicative) {
        base = cv_selection.base_M * (1.0 + epsilon);
        for (std::size_t i = 0; i < component_Ms.size(); ++i)
            relaxed[i] = component_Ms[i] * (1.0 + epsilon);
    } else {
        base = cv_selection.base_M + epsilon;
        for (std::size_t i = 0; i < component_Ms.size(); ++i)
            relaxed[i] = component_Ms[i] + epsilon;
    }
    sel.selected_M = base + F(relaxed);
    return sel;
}

double gradient_varnorm_bound(double theta_varnorm, double psi_dot_prime_sup,
                              double boundary_value_abs) {
    if (theta_varnorm < 0.0 || psi_dot_prime_sup < 0.0 || boundary_value_abs < 0.0)
        throw ConfigError("gradient_varnorm_bound inputs must be nonnegative");
    return (psi_dot_prime_sup + 1.0) * theta_varnorm + boundary_value_abs;
}

void save_hal_fit(const HalFit& fit, const std::string& path) {
    std::ostringstream out;
    out << std::setprecision(17);
    const HalBasis& b = fit.basis();
    out << "sievepi-halfit 1\n";
    out << "loss " << loss_kind_name(fit.loss()) << "\n";
    out << "d " << b.d << "\n";
    out << "n " << b.knots.rows() << "\n";
    out << "M " << fit.bound_M() << "\n";
    out << "max_interaction " << b.max_interaction << "\n";
    out << "beta0 " << fit.beta0() << "\n";
    out << "knots\n";
    for (Eigen::Index i = 0; i < b.knots.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.knots.cols(); ++j)
            out << (j ? " " : "") << b.knots(i, j);
        out << "\n";
    }
    out << "coefficients " << fit.betas().size() << "\n";
    for (const auto& [c, beta] : fit.betas())
        out << b.columns[c].subset_mask << " " << b.columns[c].knot_index << " " << beta << "\n";

    std::ofstream f(path);
    if (!f) throw DataError("cannot open fit file for writing: " + path);
    f << out.str();
}

std::shared_ptr<HalFit> load_hal_fit(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open fit file: " + path);
    std::string tag, word;
    int version = 0;
    f >> tag >> version;
    if (tag != "sievepi-halfit" || version != 1)
        throw DataError("not a HAL fit file: " + path);
    std::string loss_name;
    int d = 0, max_interaction = 0;
    Eigen::Index n = 0;
    double M = 0.0, beta0 = 0.0;
    f >> word >> loss_name >> word >> d >> word >> n >> word >> M >> word >> max_interaction >>
        word >> beta0 >> word;
    if (!f || d < 1 || n < 1) throw DataError("malformed HAL fit header: " + path);

    auto basis = std::make_shared<HalBasis>();
    basis->d = d;
    basis->max_interaction = max_interaction;
    basis->knots.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) f >> basis->knots(i, j);

    std::size_t count = 0;
    f >> word >> count;
    std::vector<std::pair<std::size_t, double>> betas;
    betas.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
        std::uint32_t mask;
        int knot;
        double beta;
        f >> mask >> knot >> beta;
        basis->columns.push_back({mask, knot});
        betas.emplace_back(c, beta);
    }
    if (!f) throw DataError("malformed HAL fit coefficients: " + path);
    return std::make_shared<HalFit>(basis, beta0, std::move(betas), M,
                                    loss_kind_from_name(loss_name));
}

}  // namespace sievepi
