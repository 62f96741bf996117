#include "coint/pipeline.hpp"

#include "coint/error.hpp"
#include "coint/limit.hpp"

namespace coint {

namespace {

template <class Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw Error(e.what(), stage);
    } catch (const std::exception& e) {
        throw Error(e.what(), stage);
    }
}

}  // namespace

stats::LrInputs PanelAnalysis::inputs() const {
    stats::LrInputs in = stats::from_plugins(plugins);
    if (!has_scores) in.h = plugins.b_eps;
    return in;
}

PanelAnalysis analyze_panel(const dgp::Panel& panel, const AnalysisOptions& options) {
    PanelAnalysis a;
    a.p = panel.dim();
    a.T = panel.length();
    if (a.T < 10) throw Error("panel needs at least 10 observations", "panel");
    if (!panel.y.allFinite()) throw Error("panel has non-finite entries", "panel");
    const Matrix diffs = panel.differences();
    a.sigma_hat = staged("sigma_hat", [&] { return emp::sigma_hat_from_differences(diffs); });
    if (options.need_scores) {
        a.bandwidths = options.bandwidths ? *options.bandwidths
                                          : staged("bandwidth", [&] {
                                                return kde::bandwidths(a.sigma_hat, a.T, a.p, options.bandwidth_rule);
                                            });
        kde::KdeConfig cfg{a.bandwidths, options.floor};
        a.scores = staged("scores", [&] { return kde::score_set_from_differences(diffs, cfg); });
        if (options.normalize_scores) staged("scores", [&] { kde::normalize_scores(a.scores, diffs); return 0; });
        a.j_raw = staged("information", [&] { return kde::fisher_info_hat(a.scores); });
        a.j_hat = staged("information", [&] { return limit::project_information(a.sigma_hat, a.j_raw, &a.j_projected); });
        a.has_scores = true;
    } else {
        a.j_raw = linalg::spd_inverse(a.sigma_hat, "degenerate panel");
        a.j_hat = a.j_raw;
        a.scores.scores = Matrix::Zero(a.p, diffs.cols());
    }
    a.plugins = staged("plugins", [&] { return emp::build_plugins(panel, a.scores, a.j_hat, a.sigma_hat); });
    return a;
}

TestResult run_test(const PanelAnalysis& analysis, stats::TestKind kind, double alpha,
                    crit::CritvalProvider& critvals) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)", "test");
    if (stats::flavor_of(kind) == stats::Flavor::Semiparametric && !analysis.has_scores)
        throw Error("semiparametric test needs scores", "test");
    TestResult r;
    r.kind = kind;
    r.trend = stats::trend_of(kind);
    r.alpha = alpha;
    r.p = analysis.p;
    r.T = analysis.T;
    r.sigma_hat = analysis.sigma_hat;
    r.j_hat = analysis.j_hat;
    r.bandwidths = analysis.bandwidths;
    r.j_projected = analysis.j_projected;
    r.underflows = analysis.scores.underflows;
    r.critval_mode = crit::to_string(critvals.config().mode);
    const stats::LrInputs in = analysis.inputs();
    r.statistic = staged("statistic", [&] { return stats::statistic(kind, in); });
    r.information_eigenvalues = limit::kind_eigenvalues(kind, analysis.sigma_hat, analysis.j_hat);
    r.critical_value = staged("critical value", [&] {
        return critvals.critical_value(kind, analysis.sigma_hat, analysis.j_hat, alpha);
    });
    r.reject = r.statistic > r.critical_value;
    return r;
}

TestResult run_test(const dgp::Panel& panel, stats::TestKind kind, double alpha, crit::CritvalProvider& critvals,
                    const AnalysisOptions& options) {
    AnalysisOptions opts = options;
    opts.need_scores = opts.need_scores && stats::flavor_of(kind) == stats::Flavor::Semiparametric;
    return run_test(analyze_panel(panel, opts), kind, alpha, critvals);
}

nlohmann::json matrix_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json vector_json(const Vector& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

nlohmann::json to_json(const TestResult& r) {
    nlohmann::json j;
    j["kind"] = stats::to_string(r.kind);
    j["trend"] = stats::to_string(r.trend);
    j["statistic"] = r.statistic;
    j["critical_value"] = r.critical_value;
    j["alpha"] = r.alpha;
    j["reject"] = r.reject;
    nlohmann::json d;
    d["p"] = r.p;
    d["T"] = r.T;
    d["sigma_hat"] = matrix_json(r.sigma_hat);
    d["j_hat"] = matrix_json(r.j_hat);
    d["bandwidths"] = vector_json(r.bandwidths);
    d["information_eigenvalues"] = vector_json(r.information_eigenvalues);
    d["j_projected"] = r.j_projected;
    d["underflows"] = r.underflows;
    d["critval_mode"] = r.critval_mode;
    j["diagnostics"] = d;
    return j;
}

}  // namespace coint
