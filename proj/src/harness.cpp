#include "coint/harness.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include <boost/version.hpp>

#include "coint/error.hpp"
#include "coint/parallel.hpp"
#include "coint/pipeline.hpp"
#include "coint/rng.hpp"

namespace coint::harness {

namespace {

constexpr const char* kStage = "harness";

struct RepOutcome {
    bool ok = false;
    std::string message;
    std::vector<TestResult> results;
};

Vector vector_from_json(const nlohmann::json& j) {
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = static_cast<Index>(j.size());
    if (rows == 0) return {};
    const auto cols = static_cast<Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j.at(static_cast<std::size_t>(i)).size()) != cols) throw Error("ragged matrix", kStage);
        for (Index k = 0; k < cols; ++k)
            m(i, k) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
    }
    return m;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Matrix StudyConfig::local_C(double c) const {
    if (direction.size() == 0) return dgp::make_local_C(c, dim());
    return dgp::make_local_C(c, direction);
}

void StudyConfig::validate() const {
    innovations.validate();
    const Index p = dim();
    if (T < 10) throw Error("T must be at least 10", kStage);
    if (reps < 100) throw Error("reps must be at least 100", kStage);
    if (c_grid.empty()) throw Error("c_grid is empty", kStage);
    for (double c : c_grid)
        if (!(c <= 0.0) || !std::isfinite(c)) throw Error("c_grid entries must be finite and <= 0", kStage);
    if (tests.empty()) throw Error("no tests configured", kStage);
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)", kStage);
    if (mu.size() != p || tau.size() != p) throw Error("mu and tau must have length p", kStage);
    if (direction.size() != 0 && (direction.rows() != p || direction.cols() != p))
        throw Error("direction must be p x p", kStage);
    if (direction.size() == 0 && p != 2) throw Error("a direction matrix is required unless p = 2", kStage);
    if (!(failure_budget >= 0.0 && failure_budget < 1.0)) throw Error("failure budget must lie in [0, 1)", kStage);
}

void apply_paper_scale(StudyConfig& config) {
    config.reps = 20000;
    config.T = 2500;
}

StudyConfig study_from_json(const nlohmann::json& doc) {
    StudyConfig c;
    if (!doc.is_object()) throw Error("study config must be a JSON object", kStage);
    Matrix sigma = doc.contains("sigma") ? matrix_from_json(doc["sigma"]) : Matrix::Identity(2, 2);
    c.distribution = doc.value("dist", std::string("gauss"));
    c.innovations = dgp::parse_distribution(c.distribution, sigma);
    if (doc.contains("slant")) {
        if (c.innovations.family != dgp::Family::SkewedT) throw Error("slant given for a non-skewed law", kStage);
        c.innovations.slant = vector_from_json(doc["slant"]);
    }
    const Index p = c.innovations.dim();
    c.mu = doc.contains("mu") ? vector_from_json(doc["mu"]) : Vector::Zero(p);
    c.tau = doc.contains("tau") ? vector_from_json(doc["tau"]) : Vector::Zero(p);
    if (doc.contains("direction")) c.direction = matrix_from_json(doc["direction"]);
    c.T = doc.value("T", c.T);
    if (doc.contains("c_grid")) c.c_grid = doc["c_grid"].get<std::vector<double>>();
    if (doc.contains("tests")) {
        c.tests.clear();
        for (const auto& t : doc["tests"]) c.tests.push_back(stats::parse_test_kind(t.get<std::string>()));
    }
    if (doc.contains("trend")) c.trend = stats::parse_trend(doc["trend"].get<std::string>());
    c.alpha = doc.value("alpha", c.alpha);
    c.reps = doc.value("reps", c.reps);
    c.master_seed = doc.value("seed", c.master_seed);
    c.workers = doc.value("workers", c.workers);
    c.floor = doc.value("floor", c.floor);
    c.normalize_scores = doc.value("normalize_scores", c.normalize_scores);
    if (doc.contains("bandwidth_rule"))
        c.bandwidth_rule = kde::parse_bandwidth_rule(doc["bandwidth_rule"].get<std::string>());
    c.failure_budget = doc.value("failure_budget", c.failure_budget);
    if (doc.contains("critvals")) {
        const auto& cv = doc["critvals"];
        if (cv.contains("mode")) c.critvals.mode = crit::parse_mode(cv["mode"].get<std::string>());
        c.critvals.grid_n = cv.value("grid_n", c.critvals.grid_n);
        c.critvals.reps = cv.value("reps", c.critvals.reps);
        c.critvals.seed = cv.value("seed", c.critvals.seed);
        c.critvals.step = cv.value("step", c.critvals.step);
        c.critvals.cache_path = cv.value("cache", c.critvals.cache_path);
    }
    c.out_dir = doc.value("out_dir", c.out_dir);
    if (doc.value("paper_scale", false)) apply_paper_scale(c);
    return c;
}

nlohmann::json study_to_json(const StudyConfig& c) {
    nlohmann::json j;
    j["dist"] = c.distribution;
    j["sigma"] = matrix_json(c.innovations.sigma);
    if (c.innovations.family == dgp::Family::SkewedT) j["slant"] = vector_json(c.innovations.slant);
    j["mu"] = vector_json(c.mu);
    j["tau"] = vector_json(c.tau);
    j["direction"] = matrix_json(c.direction.size() ? c.direction : c.local_C(1.0));
    j["T"] = c.T;
    j["c_grid"] = c.c_grid;
    nlohmann::json tests = nlohmann::json::array();
    for (auto t : c.tests) tests.push_back(stats::to_string(t));
    j["tests"] = tests;
    j["trend"] = stats::to_string(c.trend);
    j["alpha"] = c.alpha;
    j["reps"] = c.reps;
    j["seed"] = c.master_seed;
    j["floor"] = c.floor;
    j["bandwidth_rule"] = kde::to_string(c.bandwidth_rule);
    j["normalize_scores"] = c.normalize_scores;
    j["failure_budget"] = c.failure_budget;
    j["critvals"] = {{"mode", crit::to_string(c.critvals.mode)},
                     {"grid_n", c.critvals.grid_n},
                     {"reps", c.critvals.reps},
                     {"seed", c.critvals.seed},
                     {"step", c.critvals.step}};
    return j;
}

const PowerRow& PowerCurve::at(double c, stats::TestKind test) const {
    for (const auto& r : rows)
        if (r.c == c && r.test == test) return r;
    throw Error("no power row for c = " + format_double(c) + ", test " + stats::to_string(test), kStage);
}

void check_failure_budget(std::size_t failed, std::size_t total, double budget, double c) {
    if (static_cast<double>(failed) > budget * static_cast<double>(total))
        throw Error("failure budget exceeded at c = " + format_double(c) + ": " + std::to_string(failed) + " of " +
                        std::to_string(total) + " replications failed",
                    kStage);
}

PowerCurve run_study(const StudyConfig& config, crit::CritvalProvider& critvals) {
    config.validate();
    const Index p = config.dim();
    const std::size_t nc = config.c_grid.size();
    const auto R = static_cast<std::size_t>(config.reps);
    bool need_scores = false;
    for (auto t : config.tests) need_scores = need_scores || stats::flavor_of(t) == stats::Flavor::Semiparametric;

    std::vector<RepOutcome> outcomes(nc * R);
    parallel_for(nc * R, config.workers, [&](std::size_t idx) {
        const std::size_t ci = idx / R;
        const std::size_t r = idx % R;
        RepOutcome& out = outcomes[idx];
        try {
            dgp::EcmConfig ecm;
            ecm.p = p;
            ecm.T = config.T;
            ecm.C = config.local_C(config.c_grid[ci]);
            ecm.mu = config.mu;
            ecm.tau = config.trend == stats::TrendCase::LinearTrend ? config.tau : Vector::Zero(p);
            ecm.seed = derive_seed(config.master_seed, r);
            const Matrix eps = dgp::sample_innovations(config.innovations, config.T, ecm.seed);
            const dgp::Panel panel = dgp::simulate_ecm(ecm, eps);
            AnalysisOptions opts;
            opts.floor = config.floor;
            opts.bandwidth_rule = config.bandwidth_rule;
            opts.normalize_scores = config.normalize_scores;
            opts.need_scores = need_scores;
            const PanelAnalysis analysis = analyze_panel(panel, opts);
            for (auto t : config.tests) out.results.push_back(run_test(analysis, t, config.alpha, critvals));
            out.ok = true;
        } catch (const std::exception& e) {
            out.ok = false;
            out.results.clear();
            out.message = e.what();
        }
    });

    PowerCurve curve;
    for (std::size_t ci = 0; ci < nc; ++ci) {
        std::size_t good = 0;
        for (std::size_t r = 0; r < R; ++r) {
            const RepOutcome& o = outcomes[ci * R + r];
            if (o.ok) {
                ++good;
            } else {
                curve.failures.push_back({config.c_grid[ci], static_cast<Index>(r), o.message});
            }
        }
        check_failure_budget(R - good, R, config.failure_budget, config.c_grid[ci]);
        for (std::size_t ti = 0; ti < config.tests.size(); ++ti) {
            std::size_t rejects = 0;
            TestDiagnostics d;
            d.c = config.c_grid[ci];
            d.test = config.tests[ti];
            for (std::size_t r = 0; r < R; ++r) {
                const RepOutcome& o = outcomes[ci * R + r];
                if (!o.ok) continue;
                const TestResult& res = o.results[ti];
                if (res.reject) ++rejects;
                d.mean_statistic += res.statistic;
                d.mean_critical_value += res.critical_value;
                d.underflows += res.underflows;
                if (res.j_projected) ++d.projected;
            }
            PowerRow row;
            row.c = config.c_grid[ci];
            row.test = config.tests[ti];
            row.trend = config.trend;
            row.reps = static_cast<Index>(good);
            row.T = config.T;
            row.rate = good ? static_cast<double>(rejects) / static_cast<double>(good) : 0.0;
            row.se = good ? std::sqrt(row.rate * (1.0 - row.rate) / static_cast<double>(good)) : 0.0;
            if (good) {
                d.mean_statistic /= static_cast<double>(good);
                d.mean_critical_value /= static_cast<double>(good);
            }
            curve.rows.push_back(row);
            curve.diagnostics.push_back(d);
        }
    }
    return curve;
}

PowerCurve run_study(const StudyConfig& config) {
    crit::CritvalProvider critvals(config.critvals);
    PowerCurve curve = run_study(config, critvals);
    critvals.save();
    return curve;
}

void write_power_csv(const PowerCurve& curve, std::ostream& out) {
    out << "c,test,trend,rate,se,reps,T\n";
    for (const auto& r : curve.rows)
        out << format_double(r.c) << "," << stats::to_string(r.test) << "," << stats::to_string(r.trend) << ","
            << format_double(r.rate) << "," << format_double(r.se) << "," << r.reps << "," << r.T << "\n";
}

nlohmann::json study_json(const StudyConfig& config, const PowerCurve& curve) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["config"] = study_to_json(config);
    j["seeds"] = {{"master", config.master_seed},
                  {"derivation", "splitmix64(splitmix64(splitmix64(master) ^ stream) + rep)"},
                  {"stream", 0},
                  {"common_across_c", true}};
    j["environment"] = {{"compiler", __VERSION__},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)},
                        {"boost", BOOST_LIB_VERSION}};
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : curve.rows)
        rows.push_back({{"c", r.c},
                        {"test", stats::to_string(r.test)},
                        {"trend", stats::to_string(r.trend)},
                        {"rate", r.rate},
                        {"se", r.se},
                        {"reps", r.reps},
                        {"T", r.T}});
    j["results"] = rows;
    nlohmann::json diag = nlohmann::json::array();
    for (const auto& d : curve.diagnostics)
        diag.push_back({{"c", d.c},
                        {"test", stats::to_string(d.test)},
                        {"mean_statistic", d.mean_statistic},
                        {"mean_critical_value", d.mean_critical_value},
                        {"underflows", d.underflows},
                        {"projected_information", d.projected}});
    j["diagnostics"] = diag;
    nlohmann::json fails = nlohmann::json::array();
    for (const auto& f : curve.failures) fails.push_back({{"c", f.c}, {"rep", f.rep}, {"message", f.message}});
    j["failures"] = fails;
    return j;
}

void write_outputs(const StudyConfig& config, const PowerCurve& curve) {
    if (config.out_dir.empty()) return;
    std::filesystem::create_directories(config.out_dir);
    const std::filesystem::path dir(config.out_dir);
    {
        std::ofstream out(dir / "power.csv");
        if (!out) throw Error("cannot write power.csv", kStage);
        write_power_csv(curve, out);
    }
    {
        std::ofstream out(dir / "study.json");
        if (!out) throw Error("cannot write study.json", kStage);
        out << study_json(config, curve).dump(2) << "\n";
    }
}

}  // namespace coint::harness
