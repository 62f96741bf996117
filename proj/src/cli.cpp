#include "coint/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "coint/critvals.hpp"
#include "coint/dgp.hpp"
#include "coint/error.hpp"
#include "coint/harness.hpp"
#include "coint/limit.hpp"
#include "coint/pipeline.hpp"
#include "coint/statistics.hpp"

namespace coint {

namespace {

constexpr int kUsage = 2;

Matrix sigma_or_identity(const std::string& path, Index p) {
    if (path.empty()) return Matrix::Identity(p, p);
    Matrix s = dgp::read_matrix(path);
    if (s.rows() != p) throw Error("sigma file does not match --p");
    return s;
}

Vector vector_or_zero(const std::vector<double>& v, Index p, const char* name) {
    if (v.empty()) return Vector::Zero(p);
    if (static_cast<Index>(v.size()) != p) throw Error(std::string(name) + " must have p entries");
    return Eigen::Map<const Vector>(v.data(), p);
}

std::vector<stats::TestKind> parse_kinds(const std::vector<std::string>& names) {
    std::vector<stats::TestKind> out;
    for (const auto& n : names) out.push_back(stats::parse_test_kind(n));
    return out;
}

std::vector<stats::TestKind> kinds_for(stats::TrendCase trend) {
    if (trend == stats::TrendCase::InterceptOnly) return {stats::TestKind::JohansenGauss, stats::TestKind::JohansenSemipar};
    return {stats::TestKind::SLGauss, stats::TestKind::SLSemipar};
}

struct CritFlags {
    std::string mode = "cache";
    std::string cache;
    Index grid_n = 10000;
    Index reps = 20000;
    std::uint64_t seed = 20240601;
    double step = 0.05;

    void add(CLI::App* app) {
        app->add_option("--critvals", mode, "Critical values: cache (fingerprinted), exact or simulate (bank at the "
                                            "estimated information), direct (full path simulation)")
            ->check(CLI::IsMember({"cache", "exact", "simulate", "direct"}));
        app->add_option("--cache", cache, "Persistent critical value cache file (default: $COINT_CACHE)");
        app->add_option("--crit-grid-n", grid_n, "Grid size of the null simulation")->check(CLI::Range(100, 1000000));
        app->add_option("--crit-reps", reps, "Replications of the null simulation")->check(CLI::Range(1000, 10000000));
        app->add_option("--crit-seed", seed, "Seed of the null simulation");
        app->add_option("--crit-step", step, "Fingerprint resolution of the information eigenvalues");
    }

    crit::CritvalConfig config() const {
        crit::CritvalConfig c;
        c.mode = crit::parse_mode(mode);
        c.cache_path = cache.empty() ? crit::cache_path_from_env() : cache;
        c.grid_n = grid_n;
        c.reps = reps;
        c.seed = seed;
        c.step = step;
        return c;
    }
};

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Semiparametric cointegration rank tests for VAR(1) error-correction models"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate an ECM panel and write it as CSV");
    Index sim_p = 2, sim_T = 250;
    double sim_c = 0.0;
    std::string sim_dist = "gauss", sim_out = "-", sim_sigma, sim_direction;
    std::uint64_t sim_seed = 0;
    std::vector<double> sim_mu, sim_tau, sim_slant;
    sim->add_option("--p", sim_p, "Dimension")->check(CLI::PositiveNumber);
    sim->add_option("--T", sim_T, "Sample size (>= 10)")->check(CLI::Range(Index{10}, Index{100000000}));
    sim->add_option("--c", sim_c, "Local parameter; C = c [[1, 1], [0, 0]] or c times --direction");
    sim->add_option("--dist", sim_dist, "Innovation law: gauss, t<dof>, skewt<dof>");
    sim->add_option("--slant", sim_slant, "Skew-t slant per component (default 2)")->delimiter(',');
    sim->add_option("--sigma", sim_sigma, "File with the innovation covariance (default identity)");
    sim->add_option("--direction", sim_direction, "File with the p x p direction of C");
    sim->add_option("--mu", sim_mu, "Level, comma separated")->delimiter(',');
    sim->add_option("--tau", sim_tau, "Trend slope, comma separated")->delimiter(',');
    sim->add_option("--seed", sim_seed, "Seed");
    sim->add_option("--out", sim_out, "Output CSV (default stdout)");

    // test
    auto* tst = app.add_subcommand("test", "Run a rank test on a CSV panel; prints a JSON result");
    std::string tst_data, tst_kind, tst_trend, tst_bw = "silverman";
    double tst_alpha = 0.05, tst_floor = 0.0;
    bool tst_raw = false;
    CritFlags tst_crit;
    tst->add_option("--data", tst_data, "Panel CSV with header y1,...,yp")->required();
    tst->add_option("--test", tst_kind, "johansen-gauss, johansen-semipar, sl-gauss, sl-semipar")
        ->required()
        ->check(CLI::IsMember({"johansen-gauss", "johansen-semipar", "sl-gauss", "sl-semipar"}));
    tst->add_option("--trend", tst_trend, "none or linear; must match the test (Johansen: none, SL: linear)")
        ->check(CLI::IsMember({"none", "linear"}));
    tst->add_option("--alpha", tst_alpha, "Level")->check(CLI::Range(1e-6, 1.0 - 1e-6));
    tst->add_option("--floor", tst_floor, "Density floor b_T of the score estimate")->check(CLI::NonNegativeNumber);
    tst->add_option("--bandwidth-rule", tst_bw, "Kernel bandwidth rule: silverman, logistic or literal")
        ->check(CLI::IsMember({"silverman", "logistic", "literal"}));
    tst->add_flag("--raw-scores", tst_raw, "Skip the cross-moment normalization of the kernel scores");
    tst_crit.add(tst);

    // critvals
    auto* cv = app.add_subcommand("critvals", "Plug-in critical values of the trace tests");
    Index cv_p = 2;
    std::string cv_trend = "none", cv_sigma, cv_j, cv_out = "-";
    std::vector<double> cv_alpha{0.05};
    CritFlags cv_crit;
    cv->add_option("--p", cv_p, "Dimension")->check(CLI::PositiveNumber);
    cv->add_option("--trend", cv_trend, "none or linear")->check(CLI::IsMember({"none", "linear"}));
    cv->add_option("--alpha", cv_alpha, "Levels, comma separated")->delimiter(',');
    cv->add_option("--sigma", cv_sigma, "File with sigma (default identity)");
    cv->add_option("--j", cv_j, "File with the score information (default sigma^{-1})");
    cv->add_option("--out", cv_out, "Output JSON (default stdout)");
    cv_crit.add(cv);

    // power
    auto* pw = app.add_subcommand("power", "Monte Carlo size and power study; writes power.csv and study.json");
    std::string pw_config, pw_dist, pw_trend, pw_out, pw_bw;
    Index pw_T = 0, pw_reps = 0;
    std::vector<double> pw_grid;
    std::vector<std::string> pw_tests;
    double pw_alpha = 0.0;
    std::uint64_t pw_seed = 0;
    unsigned pw_workers = 0;
    bool pw_paper = false, pw_raw = false;
    CritFlags pw_crit;
    pw->add_option("--config", pw_config, "Study JSON; flags below override its keys");
    pw->add_option("--dist", pw_dist, "Innovation law");
    pw->add_option("--T", pw_T, "Sample size");
    pw->add_option("--reps", pw_reps, "Replications per c");
    pw->add_option("--c-grid", pw_grid, "Local parameters, comma separated (<= 0)")->delimiter(',');
    pw->add_option("--tests", pw_tests, "Test kinds, comma separated")->delimiter(',');
    pw->add_option("--trend", pw_trend, "none or linear")->check(CLI::IsMember({"none", "linear"}));
    pw->add_option("--alpha", pw_alpha, "Level");
    pw->add_option("--seed", pw_seed, "Master seed");
    pw->add_option("--workers", pw_workers, "Worker threads (0 = all cores)");
    pw->add_option("--out-dir", pw_out, "Output directory");
    pw->add_option("--bandwidth-rule", pw_bw, "Kernel bandwidth rule: silverman, logistic or literal")
        ->check(CLI::IsMember({"silverman", "logistic", "literal"}));
    pw->add_flag("--raw-scores", pw_raw, "Skip the cross-moment normalization of the kernel scores");
    pw->add_flag("--paper-scale", pw_paper, "20000 replications at T = 2500");
    pw_crit.add(pw);

    // envelope
    auto* env = app.add_subcommand("envelope", "Limit-experiment power envelope and limit power of the trace tests");
    Index env_p = 2, env_reps = 5000, env_grid_n = 2000;
    std::string env_dist = "gauss", env_trend = "none", env_sigma, env_out = "-", env_direction;
    std::vector<double> env_grid{0, -2.5, -5, -7.5, -10, -15, -20};
    std::vector<std::string> env_tests;
    double env_alpha = 0.05;
    std::uint64_t env_seed = 7;
    unsigned env_workers = 0;
    env->add_option("--p", env_p, "Dimension")->check(CLI::PositiveNumber);
    env->add_option("--dist", env_dist, "Innovation law fixing (sigma, J)");
    env->add_option("--sigma", env_sigma, "File with sigma (default identity)");
    env->add_option("--direction", env_direction, "File with the p x p direction of C");
    env->add_option("--trend", env_trend, "none or linear")->check(CLI::IsMember({"none", "linear"}));
    env->add_option("--c-grid", env_grid, "Local parameters, comma separated")->delimiter(',');
    env->add_option("--tests", env_tests, "Trace tests to compare (default: both for the trend case)")->delimiter(',');
    env->add_option("--alpha", env_alpha, "Level");
    env->add_option("--reps", env_reps, "Replications")->check(CLI::Range(Index{100}, Index{100000000}));
    env->add_option("--grid-n", env_grid_n, "Path grid size")->check(CLI::Range(Index{100}, Index{10000000}));
    env->add_option("--seed", env_seed, "Seed");
    env->add_option("--workers", env_workers, "Worker threads (0 = all cores)");
    env->add_option("--out", env_out, "Output CSV (default stdout)");

    // diag-labf
    auto* lab = app.add_subcommand("diag-labf", "Finite-T central sequence against its limit (Gaussian errors)");
    std::vector<Index> lab_T{100, 400, 1600};
    double lab_c = -0.5;
    Index lab_p = 2, lab_reps = 20000, lab_grid_n = 6400;
    std::uint64_t lab_seed = 11;
    std::string lab_sigma, lab_out = "-";
    unsigned lab_workers = 0;
    lab->add_option("--T-list", lab_T, "Sample sizes, comma separated (must divide --grid-n)")->delimiter(',');
    lab->add_option("--c", lab_c, "C = c [[1, 1], [0, 0]]");
    lab->add_option("--p", lab_p, "Dimension (2 unless --sigma is given)");
    lab->add_option("--sigma", lab_sigma, "File with sigma (default identity)");
    lab->add_option("--reps", lab_reps, "Replications")->check(CLI::Range(Index{100}, Index{100000000}));
    lab->add_option("--grid-n", lab_grid_n, "Fine grid size")->check(CLI::Range(Index{100}, Index{10000000}));
    lab->add_option("--seed", lab_seed, "Seed");
    lab->add_option("--workers", lab_workers, "Worker threads (0 = all cores)");
    lab->add_option("--out", lab_out, "Output JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*sim) {
            dgp::EcmConfig ecm;
            const Matrix sigma = sigma_or_identity(sim_sigma, sim_p);
            dgp::InnovationSpec spec = dgp::parse_distribution(sim_dist, sigma);
            if (!sim_slant.empty()) spec.slant = vector_or_zero(sim_slant, sim_p, "--slant");
            ecm.p = sim_p;
            ecm.T = sim_T;
            ecm.C = sim_direction.empty() ? dgp::make_local_C(sim_c, sim_p)
                                          : dgp::make_local_C(sim_c, dgp::read_matrix(sim_direction));
            ecm.mu = vector_or_zero(sim_mu, sim_p, "--mu");
            ecm.tau = vector_or_zero(sim_tau, sim_p, "--tau");
            ecm.seed = sim_seed;
            const dgp::Panel panel = dgp::simulate_ecm(ecm, dgp::sample_innovations(spec, sim_T, sim_seed));
            std::ostringstream os;
            dgp::write_panel_csv(panel, os);
            write_text(sim_out, os.str());
            return 0;
        }
        if (*tst) {
            const auto kind = stats::parse_test_kind(tst_kind);
            if (!tst_trend.empty() && stats::parse_trend(tst_trend) != stats::trend_of(kind))
                throw Error("test " + tst_kind + " is defined for trend " + stats::to_string(stats::trend_of(kind)));
            const dgp::Panel panel = dgp::read_panel_csv(tst_data);
            crit::CritvalProvider critvals(tst_crit.config());
            AnalysisOptions opts;
            opts.floor = tst_floor;
            opts.bandwidth_rule = kde::parse_bandwidth_rule(tst_bw);
            opts.normalize_scores = !tst_raw;
            const TestResult result = run_test(panel, kind, tst_alpha, critvals, opts);
            critvals.save();
            std::cout << to_json(result).dump(2) << "\n";
            return result.reject ? 1 : 0;
        }
        if (*cv) {
            const Matrix sigma = sigma_or_identity(cv_sigma, cv_p);
            Matrix j = cv_j.empty() ? linalg::spd_inverse(sigma, "sigma not positive definite") : dgp::read_matrix(cv_j);
            bool projected = false;
            j = limit::project_information(sigma, j, &projected);
            crit::CritvalProvider critvals(cv_crit.config());
            nlohmann::json out;
            out["p"] = cv_p;
            out["trend"] = cv_trend;
            out["sigma"] = matrix_json(sigma);
            out["j"] = matrix_json(j);
            out["j_projected"] = projected;
            out["mode"] = crit::to_string(critvals.config().mode);
            out["grid_n"] = critvals.config().grid_n;
            out["reps"] = critvals.config().reps;
            out["values"] = nlohmann::json::array();
            for (auto kind : kinds_for(stats::parse_trend(cv_trend))) {
                for (double a : cv_alpha) {
                    out["values"].push_back({{"test", stats::to_string(kind)},
                                             {"alpha", a},
                                             {"value", critvals.critical_value(kind, sigma, j, a)},
                                             {"information_eigenvalues",
                                              vector_json(limit::kind_eigenvalues(kind, sigma, j))}});
                }
            }
            critvals.save();
            write_text(cv_out, out.dump(2) + "\n");
            return 0;
        }
        if (*pw) {
            nlohmann::json doc = pw_config.empty() ? nlohmann::json::object() : read_json_file(pw_config);
            if (!pw_dist.empty()) doc["dist"] = pw_dist;
            if (pw->count("--T")) doc["T"] = pw_T;
            if (pw->count("--reps")) doc["reps"] = pw_reps;
            if (!pw_grid.empty()) doc["c_grid"] = pw_grid;
            if (!pw_tests.empty()) doc["tests"] = pw_tests;
            if (!pw_trend.empty()) doc["trend"] = pw_trend;
            if (pw->count("--alpha")) doc["alpha"] = pw_alpha;
            if (pw->count("--seed")) doc["seed"] = pw_seed;
            if (pw->count("--workers")) doc["workers"] = pw_workers;
            if (!pw_out.empty()) doc["out_dir"] = pw_out;
            if (!pw_bw.empty()) doc["bandwidth_rule"] = pw_bw;
            if (pw_raw) doc["normalize_scores"] = false;
            if (pw_paper) doc["paper_scale"] = true;
            auto& cvd = doc["critvals"];
            if (!cvd.is_object()) cvd = nlohmann::json::object();
            if (pw->count("--critvals")) cvd["mode"] = pw_crit.mode;
            if (pw->count("--cache")) cvd["cache"] = pw_crit.cache;
            if (pw->count("--crit-grid-n")) cvd["grid_n"] = pw_crit.grid_n;
            if (pw->count("--crit-reps")) cvd["reps"] = pw_crit.reps;
            if (pw->count("--crit-seed")) cvd["seed"] = pw_crit.seed;
            if (pw->count("--crit-step")) cvd["step"] = pw_crit.step;
            if (!cvd.contains("cache")) cvd["cache"] = crit::cache_path_from_env();
            harness::StudyConfig config = harness::study_from_json(doc);
            const harness::PowerCurve curve = harness::run_study(config);
            harness::write_outputs(config, curve);
            if (config.out_dir.empty()) harness::write_power_csv(curve, std::cout);
            return 0;
        }
        if (*env) {
            const Matrix sigma = sigma_or_identity(env_sigma, env_p);
            const dgp::InnovationSpec spec = dgp::parse_distribution(env_dist, sigma);
            const auto trend = stats::parse_trend(env_trend);
            limit::LimitSpec ls;
            ls.sigma = sigma;
            ls.j = limit::project_information(sigma, dgp::population_information(spec));
            ls.grid_n = env_grid_n;
            ls.reps = env_reps;
            ls.seed = env_seed;
            const Matrix direction =
                env_direction.empty() ? dgp::make_local_C(1.0, env_p) : dgp::read_matrix(env_direction);
            const auto kinds = env_tests.empty() ? kinds_for(trend) : parse_kinds(env_tests);
            const auto result = limit::power_envelope(ls, trend, env_grid, env_alpha, kinds, direction, env_workers);
            std::ostringstream os;
            os << "c,test,trend,rate,se,reps,T\n";
            const std::string tr = stats::to_string(trend);
            for (const auto& row : result.rows) {
                os << harness::format_double(row.c) << ",envelope," << tr << "," << harness::format_double(row.envelope)
                   << "," << harness::format_double(row.envelope_se) << "," << env_reps << "," << env_grid_n << "\n";
                for (std::size_t k = 0; k < kinds.size(); ++k)
                    os << harness::format_double(row.c) << "," << stats::to_string(kinds[k]) << "," << tr << ","
                       << harness::format_double(row.test_power[k]) << "," << harness::format_double(row.test_se[k])
                       << "," << env_reps << "," << env_grid_n << "\n";
            }
            write_text(env_out, os.str());
            return 0;
        }
        if (*lab) {
            const Matrix sigma = sigma_or_identity(lab_sigma, lab_p);
            limit::LimitSpec ls;
            ls.sigma = sigma;
            ls.j = linalg::spd_inverse(sigma, "sigma not positive definite");
            ls.grid_n = lab_grid_n;
            ls.reps = lab_reps;
            ls.seed = lab_seed;
            const Matrix C = sigma.rows() == 2 ? dgp::make_local_C(lab_c, 2) : Matrix(lab_c * Matrix::Identity(sigma.rows(), sigma.rows()));
            const auto report = limit::labf_diagnostic(lab_T, ls, C, lab_workers);
            nlohmann::json out;
            out["c"] = lab_c;
            out["C"] = matrix_json(C);
            out["reps"] = report.reps;
            out["grid_n"] = report.grid_n;
            out["rows"] = nlohmann::json::array();
            for (const auto& r : report.rows)
                out["rows"].push_back({{"T", r.T},
                                       {"mean_finite", r.mean_finite},
                                       {"var_finite", r.var_finite},
                                       {"mean_limit", r.mean_limit},
                                       {"var_limit", r.var_limit},
                                       {"distance", r.distance},
                                       {"rms_gap", r.rms_gap}});
            out["exp_mean"] = report.exp_mean;
            out["exp_se"] = report.exp_se;
            write_text(lab_out, out.dump(2) + "\n");
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace coint
