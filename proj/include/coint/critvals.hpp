#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>

#include "coint/linalg.hpp"
#include "coint/statistics.hpp"

/// Plug-in critical values with an in-memory memo and an optional
/// persistent JSON cache.
namespace coint::crit {

enum class Mode {
    Cache,   ///< information eigenvalues rounded to a fingerprint, memoized
    Exact,   ///< unrounded eigenvalues, evaluated on the null bank
    Direct,  ///< full path simulation at (sigma, j)
};

Mode parse_mode(const std::string& s);
std::string to_string(Mode m);

struct CritvalConfig {
    Mode mode = Mode::Cache;
    Index grid_n = 10000;
    Index reps = 20000;
    std::uint64_t seed = 20240601;
    double step = 0.05;      ///< fingerprint resolution
    std::string cache_path;  ///< empty: memory only
};

/// COINT_CACHE, or empty when unset.
std::string cache_path_from_env();

/// Eigenvalues rounded to the nearest multiple of `step`, floored at 1.
Vector fingerprint(const Vector& k, double step);

std::string cache_key(stats::TestKind kind, Index p, Index grid_n, Index reps, std::uint64_t seed,
                      const Vector& fp);

class CritvalProvider {
public:
    explicit CritvalProvider(CritvalConfig config);

    /// j must already be coherent with sigma.
    double critical_value(stats::TestKind kind, const Matrix& sigma, const Matrix& j, double alpha);

    /// Writes the memo to cache_path (no-op when empty).
    void save() const;

    const CritvalConfig& config() const { return config_; }
    std::size_t hits() const;
    std::size_t misses() const;

    static constexpr int kVersion = 1;

private:
    CritvalConfig config_;
    mutable std::mutex mutex_;
    std::map<std::string, std::map<std::string, double>> table_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace coint::crit
