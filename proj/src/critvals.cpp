#include "coint/critvals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "coint/error.hpp"
#include "coint/limit.hpp"

namespace coint::crit {

namespace {

constexpr const char* kStage = "critical value";

std::string alpha_key(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", alpha);
    return buf;
}

}  // namespace

Mode parse_mode(const std::string& s) {
    if (s == "cache") return Mode::Cache;
    if (s == "exact" || s == "simulate") return Mode::Exact;
    if (s == "direct") return Mode::Direct;
    throw Error("unknown critical value mode: " + s);
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Cache: return "cache";
        case Mode::Exact: return "exact";
        case Mode::Direct: return "direct";
    }
    return "unknown";
}

std::string cache_path_from_env() {
    const char* v = std::getenv("COINT_CACHE");
    return v ? std::string(v) : std::string{};
}

Vector fingerprint(const Vector& k, double step) {
    Vector out(k.size());
    for (Index i = 0; i < k.size(); ++i) out(i) = std::max(1.0, std::round(k(i) / step) * step);
    std::sort(out.data(), out.data() + out.size());
    return out;
}

std::string cache_key(stats::TestKind kind, Index p, Index grid_n, Index reps, std::uint64_t seed,
                      const Vector& fp) {
    std::ostringstream os;
    os << stats::to_string(kind) << "|p=" << p << "|" << stats::to_string(stats::trend_of(kind)) << "|n=" << grid_n
       << "|R=" << reps << "|seed=" << seed << "|k=";
    char buf[32];
    for (Index i = 0; i < fp.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.4f", fp(i));
        os << (i ? "," : "") << buf;
    }
    return os.str();
}

CritvalProvider::CritvalProvider(CritvalConfig config) : config_(std::move(config)) {
    if (config_.grid_n < 100) throw Error("grid_n must be at least 100", kStage);
    if (config_.reps < 1000) throw Error("critical values need at least 1000 replications", kStage);
    if (!(config_.step > 0.0)) throw Error("fingerprint step must be positive", kStage);
    if (config_.cache_path.empty() || !std::filesystem::exists(config_.cache_path)) return;
    std::ifstream in(config_.cache_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception&) {
        return;
    }
    if (!doc.is_object() || doc.value("version", 0) != kVersion || !doc.contains("entries")) return;
    for (const auto& [key, row] : doc["entries"].items())
        for (const auto& [alpha, value] : row.items()) table_[key][alpha] = value.get<double>();
}

double CritvalProvider::critical_value(stats::TestKind kind, const Matrix& sigma, const Matrix& j, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)", kStage);
    const Index p = sigma.rows();
    limit::LimitSpec spec;
    spec.sigma = sigma;
    spec.j = j;
    spec.grid_n = config_.grid_n;
    spec.reps = config_.reps;
    spec.seed = config_.seed;
    const Vector k = limit::kind_eigenvalues(kind, sigma, j);
    if (config_.mode == Mode::Direct) return limit::critical_value_direct(kind, spec, alpha);
    const Vector used = config_.mode == Mode::Cache ? fingerprint(k, config_.step) : k;
    const std::string key = cache_key(kind, p, config_.grid_n, config_.reps, config_.seed, used);
    const std::string akey = alpha_key(alpha);
    if (config_.mode == Mode::Cache) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = table_.find(key);
        if (it != table_.end()) {
            auto jt = it->second.find(akey);
            if (jt != it->second.end()) {
                ++hits_;
                return jt->second;
            }
        }
    }
    const auto bank = limit::shared_bank(p, stats::trend_of(kind), config_.grid_n, config_.reps, config_.seed);
    std::vector<double> values = bank->statistics(used);
    const double value = linalg::empirical_quantile(values, 1.0 - alpha);
    if (config_.mode == Mode::Cache) {
        std::lock_guard<std::mutex> lock(mutex_);
        ++misses_;
        table_[key][akey] = value;
    }
    return value;
}

void CritvalProvider::save() const {
    if (config_.cache_path.empty()) return;
    nlohmann::json doc;
    doc["version"] = kVersion;
    doc["entries"] = nlohmann::json::object();
    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (const auto& [key, row] : table_)
            for (const auto& [alpha, value] : row) doc["entries"][key][alpha] = value;
    }
    const std::string tmp = config_.cache_path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write " + tmp, kStage);
        out << doc.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, config_.cache_path);
}

std::size_t CritvalProvider::hits() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return hits_;
}

std::size_t CritvalProvider::misses() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return misses_;
}

}  // namespace coint::crit
