// sievepi command-line frontend: fit estimators, compute summary estimates
// with confidence intervals, and rerun the simulation study tables/figures.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sievepi/boosting.hpp"
#include "sievepi/dgp.hpp"
#include "sievepi/errors.hpp"
#include "sievepi/folds.hpp"
#include "sievepi/hal.hpp"
#include "sievepi/kernel.hpp"
#include "sievepi/montecarlo.hpp"
#include "sievepi/poly.hpp"
#include "sievepi/series.hpp"
#include "sievepi/summaries.hpp"

namespace fs = std::filesystem;
using namespace sievepi;

namespace {

void atomic_write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

struct FitSpec {
    std::string data_path;
    std::string dgp_name;
    long n = 1000;
    std::uint64_t seed = 1;
    std::string estimator = "hal";  // hal | series
    std::string bound = "cv";       // hal: cv | gcv | gcv+ | <number>
    int interactions = 1;
    std::string loss_name = "squared";
    std::string series_kind = "trig-composed";
    std::string init_name = "boosting";
    std::string K = "cv";
    std::string out_dir = ".";
};

Sample load_input(const FitSpec& spec, Dgp* dgp_out) {
    const bool have_data = !spec.data_path.empty();
    const bool have_dgp = !spec.dgp_name.empty();
    if (have_data == have_dgp)
        throw ConfigError("provide exactly one of --data and --dgp");
    if (have_data) return read_sample_csv(spec.data_path);
    Dgp dgp = Dgp::make(dgp_kind_from_name(spec.dgp_name));
    if (dgp_out) *dgp_out = dgp;
    if (spec.n < 1) throw ConfigError("--n must be at least 1");
    return sample_dgp(dgp, spec.n, spec.seed);
}

SeriesKind parse_series_kind(const std::string& name) {
    if (name == "trig-composed") return SeriesKind::TrigComposed;
    if (name == "trig-tensor") return SeriesKind::TrigTensorGeneralized;
    if (name == "targeted") return SeriesKind::TargetedSpan;
    throw ConfigError("unknown series kind '" + name +
                      "' (trig-composed, trig-tensor, targeted)");
}

FittedFunctionPtr fit_init(const std::string& name, const Sample& s, std::uint64_t seed) {
    if (name == "boosting") {
        BoostingConfig cfg;
        cfg.seed = seed;
        if (s.has_treatment()) return fit_boosting_arms(s, cfg);
        return fit_boosting(s, cfg);
    }
    if (name == "kernel") {
        if (s.has_treatment())
            throw ConfigError("kernel init fit does not support treatment arms");
        return fit_kernel_cv(s, make_folds(s.n(), 10, seed));
    }
    if (name == "poly") {
        if (s.has_treatment())
            throw ConfigError("poly init fit does not support treatment arms");
        return fit_poly_cv(s, make_folds(s.n(), 10, seed));
    }
    throw ConfigError("unknown init fit '" + name + "' (boosting, kernel, poly)");
}

// ---------------------------------------------------------------- fit ------

int cmd_fit(const FitSpec& spec) {
    Dgp dgp;
    const Sample s = load_input(spec, &dgp);
    fs::create_directories(spec.out_dir);

    if (spec.estimator == "hal") {
        Loss loss{spec.loss_name == "logistic" ? LossKind::Logistic : LossKind::SquaredError};
        auto basis = std::make_shared<HalBasis>(build_hal_basis(s, spec.interactions));
        double M = 0.0;
        char* end = nullptr;
        const double numeric = std::strtod(spec.bound.c_str(), &end);
        if (end && *end == '\0' && !spec.bound.empty()) {
            M = numeric;
            if (M <= 0.0) throw ConfigError("--bound must be positive");
        } else if (spec.bound == "cv" || spec.bound == "gcv" || spec.bound == "gcv+") {
            auto sel = select_M_cv(s, loss, default_m_grid(s), make_folds(s.n(), 10, spec.seed),
                                   spec.interactions);
            std::printf("CV bound selection (10-fold):\n");
            for (std::size_t i = 0; i < sel.candidates.size(); ++i)
                std::printf("  M=%-12.5f cv_risk=%.8f%s\n", sel.candidates[i], sel.cv_risks[i],
                            sel.candidates[i] == sel.selected_M ? "  <- selected" : "");
            M = sel.selected_M;
            if (spec.bound == "gcv") M = 3.0 * sel.selected_M;
            if (spec.bound == "gcv+") M = 3.1 * sel.selected_M;
        } else {
            throw ConfigError("--bound must be cv, gcv, gcv+ or a positive number");
        }
        auto fit = fit_hal(s, loss, M, basis);
        const fs::path out = fs::path(spec.out_dir) / "fit_hal.txt";
        save_hal_fit(*fit, out.string() + ".tmp");
        fs::rename(out.string() + ".tmp", out);
        std::printf("bound M            %.6f\n", M);
        std::printf("attained l1        %.6f\n", fit->attained_l1());
        std::printf("variation norm     %.6f\n", variation_norm(*fit));
        std::printf("training risk      %.8f\n", empirical_risk(*fit, loss, s));
        std::printf("nonzero columns    %zu\n", fit->betas().size());
        std::printf("wrote %s\n", out.c_str());
        return 0;
    }
    if (spec.estimator == "series") {
        Loss loss{s.has_treatment() ? LossKind::ArmSquaredError : LossKind::SquaredError};
        auto init = fit_init(spec.init_name, s, spec.seed);
        const SeriesKind kind = parse_series_kind(spec.series_kind);
        std::shared_ptr<SeriesFit> fit;
        if (spec.K == "cv") {
            std::vector<double> risks;
            auto [k_star, best] = select_K_cv(init, kind, default_k_grid(s.n()), s, loss,
                                              make_folds(s.n(), 10, spec.seed + 1), &risks);
            std::printf("CV K selection (10-fold):\n");
            const auto grid = default_k_grid(s.n());
            for (std::size_t i = 0; i < grid.size(); ++i)
                std::printf("  K=%-4d cv_risk=%.8f%s\n", grid[i], risks[i],
                            grid[i] == k_star ? "  <- selected" : "");
            fit = best;
        } else {
            int K = 0;
            try {
                K = std::stoi(spec.K);
            } catch (const std::exception&) {
                throw ConfigError("--K must be cv or a nonnegative integer");
            }
            fit = fit_series(build_series_space(init, kind, K, s), s, loss);
        }
        const fs::path out = fs::path(spec.out_dir) / "fit_series.txt";
        const std::string init_ref = spec.init_name + ":seed=" + std::to_string(spec.seed);
        save_series_fit(*fit, out.string() + ".tmp", init_ref);
        fs::rename(out.string() + ".tmp", out);
        std::printf("series kind        %s\n", series_kind_name(fit->space().kind).c_str());
        std::printf("K                  %d\n", fit->space().K);
        std::printf("training risk      %.8f\n", fit->attained_risk());
        std::printf("wrote %s (init: %s)\n", out.c_str(), init_ref.c_str());
        return 0;
    }
    throw ConfigError("unknown estimator '" + spec.estimator + "' (hal, series)");
}

// ------------------------------------------------------------ estimate ----

Summary parse_summary(const std::string& name, double kappa, const Dgp& dgp, bool have_dgp) {
    if (name == "moment") return Summary::moment(kappa);
    if (name == "moment2") return Summary::moment(2.0);
    if (name == "mean-counterfactual") return Summary::mean_counterfactual();
    if (name == "hte-variance") return Summary::hte_variance();
    if (name == "average-derivative") {
        if (!have_dgp)
            throw ConfigError(
                "average-derivative needs the analytic density score; only available with --dgp");
        return dgp.summary;  // DGP supplies the score
    }
    throw ConfigError("unknown summary '" + name +
                      "' (moment, moment2, mean-counterfactual, hte-variance, "
                      "average-derivative)");
}

int cmd_estimate(const FitSpec& spec, const std::string& fit_path, const std::string& summary_name,
                 double kappa, const std::string& mode) {
    Dgp dgp;
    const bool have_dgp = !spec.dgp_name.empty();
    const Sample s = load_input(spec, &dgp);
    const Summary summary = parse_summary(summary_name, kappa, dgp, have_dgp);

    FittedFunctionPtr fit;
    std::string provenance;
    if (!fit_path.empty()) {
        fit = load_hal_fit(fit_path);
        provenance = "hal-file:" + fit_path;
    } else if (spec.estimator == "hal") {
        // refit inline with the same spec as cmd_fit, quietly
        Loss loss{LossKind::SquaredError};
        double M;
        char* end = nullptr;
        const double numeric = std::strtod(spec.bound.c_str(), &end);
        if (end && *end == '\0' && !spec.bound.empty()) {
            M = numeric;
        } else {
            auto sel = select_M_cv(s, loss, default_m_grid(s), make_folds(s.n(), 10, spec.seed),
                                   spec.interactions);
            M = sel.selected_M;
            if (spec.bound == "gcv") M = 3.0 * sel.selected_M;
            if (spec.bound == "gcv+") M = 3.1 * sel.selected_M;
        }
        fit = fit_hal(s, loss, M, build_hal_basis(s, spec.interactions));
        provenance = "hal:" + spec.bound;
    } else {
        Loss loss{s.has_treatment() ? LossKind::ArmSquaredError : LossKind::SquaredError};
        auto init = fit_init(spec.init_name, s, spec.seed);
        const SeriesKind kind = parse_series_kind(spec.series_kind);
        if (spec.K == "cv") {
            fit = select_K_cv(init, kind, default_k_grid(s.n()), s, loss,
                              make_folds(s.n(), 10, spec.seed + 1))
                      .second;
        } else {
            fit = fit_series(build_series_space(init, kind, std::stoi(spec.K), s), s, loss);
        }
        provenance = "series:" + spec.series_kind + ":" + spec.init_name + ":K=" + spec.K;
    }

    FittedFunctionPtr propensity;
    if (summary.needs_propensity()) {
        if (!s.has_treatment())
            throw ConfigError("summary '" + summary_name +
                              "' needs a propensity; the data has no treatment column 'a'");
        BoostingConfig pcfg;
        pcfg.seed = spec.seed + 7;
        propensity = fit_boosting_propensity(s, pcfg);
    }

    EstimateReport report = mode == "one-step" ? one_step(summary, *fit, s, propensity)
                                               : plug_in(summary, *fit, s, propensity);
    report.provenance = provenance;

    std::printf("summary       %s\n", summary_name.c_str());
    std::printf("estimator     %s (%s)\n", provenance.c_str(), mode.c_str());
    std::printf("psi_hat       %.8f\n", report.psi_hat);
    std::printf("se            %.8f\n", report.se);
    std::printf("95%% CI        [%.8f, %.8f]%s\n", report.ci_lo, report.ci_hi,
                report.degenerate_ci ? " (degenerate)" : "");
    if (report.truncated_propensities > 0)
        std::printf("note          %d propensity values truncated to [0.01, 0.99]\n",
                    report.truncated_propensities);

    fs::create_directories(spec.out_dir);
    const fs::path csv = fs::path(spec.out_dir) / "estimates.csv";
    std::string content;
    if (fs::exists(csv)) {
        std::ifstream in(csv);
        std::stringstream buf;
        buf << in.rdbuf();
        content = buf.str();
    } else {
        content = EstimateReport::csv_header() + "\n";
    }
    content += report.csv_row(summary_name, s.n(), spec.seed) + "\n";
    atomic_write(csv, content);
    std::printf("appended %s\n", csv.c_str());
    return 0;
}

// ----------------------------------------------------------- reproduce ----

struct RunDef {
    McConfig cfg;
    bool is_figure = false;
};

RunDef run_definition(const std::string& id, const std::string& scale, std::uint64_t seed) {
    const bool full = scale == "full";
    if (!full && scale != "desk")
        throw ConfigError("--scale must be desk or full");
    McConfig cfg;
    cfg.base_seed = seed;
    cfg.replicates = full ? 1000 : 200;
    const std::vector<Eigen::Index> full_grid{500, 1000, 2000, 5000, 10000, 20000};
    RunDef def;

    if (id == "table1" || id == "fig2" || id == "fig3") {
        cfg.dgp = DgpKind::HalExp;
        cfg.n_grid = full ? std::vector<Eigen::Index>{500, 1000, 2000, 5000, 10000}
                          : std::vector<Eigen::Index>{500, 1000};
        cfg.roster = {"M.cv", "M.gcv", "M.gcv+", "M.oracle"};
        if (id == "fig3") cfg.roster = {"M.cv", "M.oracle"};
    } else if (id == "table2" || id == "fig4") {
        cfg.dgp = DgpKind::StepTrig;
        cfg.n_grid = full ? full_grid : std::vector<Eigen::Index>{500, 2000};
        cfg.roster = {"poly", "xgb", "xgb.1step", "xgb.trig"};
    } else if (id == "fig5") {
        cfg.dgp = DgpKind::StepTrig;
        cfg.n_grid = {2000};
        cfg.roster = {"xgb.trig"};
    } else if (id == "table3") {
        cfg.dgp = DgpKind::RoughF;
        cfg.n_grid = full ? full_grid : std::vector<Eigen::Index>{1000, 2000};
        cfg.roster = {"ker.trig"};
    } else if (id == "table4" || id == "fig6") {
        cfg.dgp = DgpKind::HteStep;
        cfg.n_grid = full ? full_grid : std::vector<Eigen::Index>{1000, 2000};
        cfg.roster = {"poly", "xgb", "xgb.1step", "xgb.trig"};
        cfg.trim = true;
    } else if (id == "table5") {
        cfg.dgp = DgpKind::HteRoughG;
        cfg.n_grid = full ? full_grid : std::vector<Eigen::Index>{1000, 2000};
        cfg.roster = {"ker.trig"};
    } else {
        throw ConfigError("unknown id '" + id +
                          "'; valid: table1 table2 table3 table4 table5 fig2 fig3 fig4 fig5 fig6");
    }
    def.is_figure = id.rfind("fig", 0) == 0;
    def.cfg = cfg;
    return def;
}

int cmd_reproduce(const std::string& id, const std::string& scale, const std::string& out_dir,
                  std::uint64_t seed, int replicates_override) {
    RunDef def = run_definition(id, scale, seed);
    if (replicates_override > 0) def.cfg.replicates = replicates_override;
    const auto progress = [](const std::string& msg) {
        std::fprintf(stderr, "%s\n", msg.c_str());
    };

    if (id == "fig5") {
        // K sweep at fixed n: one cell per K, CSV (K, n, relative_mse, ...)
        const std::vector<int> k_grid = scale == "full"
                                            ? std::vector<int>{2, 4, 6, 8, 10, 14, 20, 26, 30}
                                            : std::vector<int>{2, 6, 10, 20, 30};
        std::string out = "K,n,replicates,relative_mse,rel_abs_bias,coverage\n";
        for (int K : k_grid) {
            McConfig cfg = def.cfg;
            cfg.fixed_K = K;
            McResult res = run_monte_carlo(cfg, progress);
            const McCell& cell = res.cells.front();
            char line[160];
            std::snprintf(line, sizeof(line), "%d,%lld,%d,%.10g,%.10g,%.10g\n", K,
                          static_cast<long long>(cell.n), cell.replicates_done, cell.relative_mse,
                          cell.rel_abs_bias, cell.coverage);
            out += line;
        }
        atomic_write(fs::path(out_dir) / (id + ".csv"), out);
        std::printf("wrote %s\n", (fs::path(out_dir) / (id + ".csv")).c_str());
        return 0;
    }

    McResult res = run_monte_carlo(def.cfg, progress);
    atomic_write(fs::path(out_dir) / (id + ".csv"), res.csv());
    std::printf("wrote %s\n", (fs::path(out_dir) / (id + ".csv")).c_str());

    if (id == "fig3") {
        // per-replicate bound ratios for the boxplot
        std::string out = "n,replicate,mcv_over_moracle\n";
        for (std::size_t c = 0; c + 1 < res.cells.size(); c += 2) {
            const McCell& cv = res.cells[c];
            const McCell& oracle = res.cells[c + 1];
            for (std::size_t r = 0;
                 r < cv.selected_bounds.size() && r < oracle.selected_bounds.size(); ++r) {
                char line[96];
                std::snprintf(line, sizeof(line), "%lld,%zu,%.10g\n",
                              static_cast<long long>(cv.n), r,
                              cv.selected_bounds[r] / oracle.selected_bounds[r]);
                out += line;
            }
        }
        atomic_write(fs::path(out_dir) / "fig3_ratios.csv", out);
        std::printf("wrote %s\n", (fs::path(out_dir) / "fig3_ratios.csv").c_str());
    } else if (def.is_figure) {
        // long format for plotting tools
        std::string out = "metric,estimator,n,value\n";
        for (const McCell& cell : res.cells) {
            char line[160];
            std::snprintf(line, sizeof(line), "relative_mse,%s,%lld,%.10g\n",
                          cell.estimator.c_str(), static_cast<long long>(cell.n),
                          cell.relative_mse);
            out += line;
            std::snprintf(line, sizeof(line), "rel_abs_bias,%s,%lld,%.10g\n",
                          cell.estimator.c_str(), static_cast<long long>(cell.n),
                          cell.rel_abs_bias);
            out += line;
        }
        atomic_write(fs::path(out_dir) / (id + "_plot.csv"), out);
        std::printf("wrote %s\n", (fs::path(out_dir) / (id + "_plot.csv")).c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sievepi: efficient plug-in estimators of summaries of nonparametric fits"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; flags override");

    FitSpec spec;
    std::string fit_path, summary_name = "moment2", mode = "plug-in", repro_id,
                scale = "desk";
    double kappa = 2.0;
    int replicates_override = 0;

    const auto add_data_opts = [&](CLI::App* cmd) {
        cmd->add_option("--data", spec.data_path, "input CSV (columns x1..xd, z[, a])");
        cmd->add_option("--dgp", spec.dgp_name,
                        "simulate instead: hal_exp, step_trig, rough_f, hte_step, hte_rough_g");
        cmd->add_option("--n", spec.n, "sample size for --dgp")->check(CLI::PositiveNumber);
        cmd->add_option("--seed", spec.seed, "RNG seed");
        cmd->add_option("--out", spec.out_dir, "output directory");
    };
    const auto add_fit_opts = [&](CLI::App* cmd) {
        cmd->add_option("--estimator", spec.estimator, "hal or series");
        cmd->add_option("--bound", spec.bound, "HAL bound: cv, gcv, gcv+ or a number");
        cmd->add_option("--interactions", spec.interactions, "HAL max interaction order");
        cmd->add_option("--loss", spec.loss_name, "HAL loss: squared or logistic");
        cmd->add_option("--series-kind", spec.series_kind,
                        "trig-composed, trig-tensor or targeted");
        cmd->add_option("--init", spec.init_name, "series init fit: boosting, kernel, poly");
        cmd->add_option("--K", spec.K, "series terms: cv or an integer");
    };

    CLI::App* fit = app.add_subcommand("fit", "fit an estimator and serialize it");
    add_data_opts(fit);
    add_fit_opts(fit);

    CLI::App* est = app.add_subcommand("estimate", "summary estimate with a 95% Wald CI");
    add_data_opts(est);
    add_fit_opts(est);
    est->add_option("--fit", fit_path, "serialized HAL fit to reuse");
    est->add_option("--summary", summary_name,
                    "moment2, moment (with --kappa), mean-counterfactual, hte-variance, "
                    "average-derivative");
    est->add_option("--kappa", kappa, "moment order for --summary moment");
    est->add_option("--mode", mode, "plug-in or one-step");

    CLI::App* rep = app.add_subcommand("reproduce", "rerun a simulation table or figure");
    rep->add_option("id", repro_id, "table1..table5 or fig2..fig6")->required();
    rep->add_option("--scale", scale, "desk (reduced) or full (full-size, multi-hour)");
    rep->add_option("--seed", spec.seed, "base seed");
    rep->add_option("--out", spec.out_dir, "output directory");
    rep->add_option("--replicates", replicates_override, "override the replicate count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fit->parsed()) return cmd_fit(spec);
        if (est->parsed()) return cmd_estimate(spec, fit_path, summary_name, kappa, mode);
        return cmd_reproduce(repro_id, scale, spec.out_dir, spec.seed, replicates_override);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const ResourceError& e) {
        std::fprintf(stderr, "resource error: %s\n", e.what());
        return 2;
    }
}
