#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "coint/critvals.hpp"
#include "coint/dgp.hpp"
#include "coint/score_kde.hpp"
#include "coint/statistics.hpp"

namespace coint::harness {

struct StudyConfig {
    dgp::InnovationSpec innovations = dgp::InnovationSpec::gaussian(Matrix::Identity(2, 2));
    std::string distribution = "gauss";
    Index T = 250;
    Vector mu = Vector::Zero(2);
    Vector tau = Vector::Zero(2);  ///< used only when trend is LinearTrend
    Matrix direction;              ///< empty: [[1, 1], [0, 0]]
    std::vector<double> c_grid{0.0};
    std::vector<stats::TestKind> tests{stats::TestKind::JohansenGauss};
    stats::TrendCase trend = stats::TrendCase::InterceptOnly;
    double alpha = 0.05;
    Index reps = 2000;
    std::uint64_t master_seed = 1;
    unsigned workers = 0;
    double floor = 0.0;
    kde::BandwidthRule bandwidth_rule = kde::BandwidthRule::Silverman;
    bool normalize_scores = true;
    double failure_budget = 0.01;
    crit::CritvalConfig critvals;
    std::string out_dir;  ///< empty: no files written

    Index dim() const { return innovations.dim(); }
    Matrix local_C(double c) const;
    void validate() const;
};

/// Reads the JSON study description; absent keys keep their defaults.
StudyConfig study_from_json(const nlohmann::json& doc);
nlohmann::json study_to_json(const StudyConfig& config);

/// reps = 20000, T = 2500.
void apply_paper_scale(StudyConfig& config);

struct PowerRow {
    double c = 0.0;
    stats::TestKind test = stats::TestKind::JohansenGauss;
    stats::TrendCase trend = stats::TrendCase::InterceptOnly;
    double rate = 0.0;
    double se = 0.0;
    Index reps = 0;
    Index T = 0;
};

struct Failure {
    double c = 0.0;
    Index rep = 0;
    std::string message;
};

struct TestDiagnostics {
    double c = 0.0;
    stats::TestKind test = stats::TestKind::JohansenGauss;
    double mean_statistic = 0.0;
    double mean_critical_value = 0.0;
    std::int64_t underflows = 0;
    Index projected = 0;
};

struct PowerCurve {
    std::vector<PowerRow> rows;
    std::vector<Failure> failures;
    std::vector<TestDiagnostics> diagnostics;

    /// Rate of (c, test); throws if absent.
    const PowerRow& at(double c, stats::TestKind test) const;
};

/// Throws when more than budget * total replications failed.
void check_failure_budget(std::size_t failed, std::size_t total, double budget, double c);

PowerCurve run_study(const StudyConfig& config, crit::CritvalProvider& critvals);
PowerCurve run_study(const StudyConfig& config);

void write_power_csv(const PowerCurve& curve, std::ostream& out);
nlohmann::json study_json(const StudyConfig& config, const PowerCurve& curve);

/// power.csv and study.json under config.out_dir.
void write_outputs(const StudyConfig& config, const PowerCurve& curve);

/// Shortest decimal text that round-trips.
std::string format_double(double v);

}  // namespace coint::harness
