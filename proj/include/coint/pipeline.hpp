#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "coint/critvals.hpp"
#include "coint/dgp.hpp"
#include "coint/empirical.hpp"
#include "coint/score_kde.hpp"
#include "coint/statistics.hpp"

namespace coint {

struct AnalysisOptions {
    double floor = 0.0;                   ///< b_T
    kde::BandwidthRule bandwidth_rule = kde::BandwidthRule::Silverman;
    std::optional<Vector> bandwidths;     ///< overrides the rule
    bool normalize_scores = true;
    bool need_scores = true;              ///< false skips the kernel step (Gaussian tests only)
};

/// Everything a panel contributes to any test, computed once.
struct PanelAnalysis {
    Index p = 0;
    Index T = 0;
    Matrix sigma_hat;
    Vector bandwidths;
    kde::ScoreSet scores;
    Matrix j_raw;            ///< centered sample information
    Matrix j_hat;            ///< projected onto sigma_hat^{-1} + PSD
    bool j_projected = false;
    emp::PluginSet plugins;
    bool has_scores = false;

    stats::LrInputs inputs() const;
};

PanelAnalysis analyze_panel(const dgp::Panel& panel, const AnalysisOptions& options = {});

struct TestResult {
    stats::TestKind kind = stats::TestKind::JohansenGauss;
    stats::TrendCase trend = stats::TrendCase::InterceptOnly;
    double statistic = 0.0;
    double critical_value = 0.0;
    double alpha = 0.05;
    bool reject = false;

    // diagnostics
    Index p = 0;
    Index T = 0;
    Matrix sigma_hat;
    Matrix j_hat;
    Vector bandwidths;
    Vector information_eigenvalues;
    bool j_projected = false;
    std::int64_t underflows = 0;
    std::string critval_mode;
};

TestResult run_test(const PanelAnalysis& analysis, stats::TestKind kind, double alpha,
                    crit::CritvalProvider& critvals);

TestResult run_test(const dgp::Panel& panel, stats::TestKind kind, double alpha, crit::CritvalProvider& critvals,
                    const AnalysisOptions& options = {});

nlohmann::json to_json(const TestResult& result);
nlohmann::json matrix_json(const Matrix& m);
nlohmann::json vector_json(const Vector& v);

}  // namespace coint
