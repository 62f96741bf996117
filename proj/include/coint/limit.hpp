#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "coint/empirical.hpp"
#include "coint/linalg.hpp"
#include "coint/statistics.hpp"

/// Simulation of the limit experiment: correlated Brownian motions, their
/// Ornstein-Uhlenbeck alternatives, null quantiles and power envelopes.
namespace coint::limit {

struct LimitSpec {
    Matrix sigma;
    Matrix j;
    Index grid_n = 10000;
    Index reps = 20000;
    std::uint64_t seed = 20240601;

    void validate() const;
};

/// Normalized coordinates of a coherent (sigma, j) pair: sigma = L L',
/// L' j L = Q diag(k) Q' with every k >= 1.
struct Coordinates {
    Matrix L;
    Matrix Q;
    Vector k;          ///< ascending, clipped at 1
    bool clipped = false;
};

/// Throws "incoherent (Σ, J) pair" when min-eig([[Σ, I], [I, J]]) < -1e-10.
Coordinates coordinates(const Matrix& sigma, const Matrix& j);

/// j moved to sigma^{-1} plus the PSD part of j - sigma^{-1}, measured in
/// the sigma metric. Never throws for a PD sigma and symmetric j.
Matrix project_information(const Matrix& sigma, const Matrix& j, bool* changed = nullptr);

struct LimitDraw {
    emp::StepProcess w_eps;
    emp::StepProcess w_lf;

    /// Inputs with the bridged score process as integrator.
    stats::LrInputs inputs(const Matrix& sigma, const Matrix& j) const;
};

LimitDraw draw_null_paths(const LimitSpec& spec, std::uint64_t rep_seed);

/// Euler scheme for dW = (C W + d_C(u) delta) du + dZ and the matching score
/// block; C = 0, delta = 0 gives draw_null_paths.
LimitDraw simulate_ou(const LimitSpec& spec, const Matrix& C, const Vector& delta, std::uint64_t rep_seed);

/// Null draws reduced to the sufficient statistics of the trace statistics
/// in normalized coordinates.
class NullBank {
public:
    NullBank(Index p, stats::TrendCase trend, Index grid_n, Index reps, std::uint64_t seed, unsigned workers = 0);

    Index dim() const { return p_; }
    Index reps() const { return static_cast<Index>(a_.size()); }
    stats::TrendCase trend() const { return trend_; }

    /// Statistic of replication r when the information eigenvalues are k.
    double statistic(Index r, const Vector& k) const;
    std::vector<double> statistics(const Vector& k) const;

private:
    Index p_;
    stats::TrendCase trend_;
    std::vector<Matrix> a_;
    std::vector<Vector> m_;
    std::vector<Matrix> s1_;
    std::vector<Matrix> s2_;
};

/// Process-wide bank registry; banks are built once per key.
std::shared_ptr<const NullBank> shared_bank(Index p, stats::TrendCase trend, Index grid_n, Index reps,
                                            std::uint64_t seed);

/// Information eigenvalues the given kind's null law depends on.
Vector kind_eigenvalues(stats::TestKind kind, const Matrix& sigma, const Matrix& j);

/// 1 - alpha quantile of the kind's null law at (sigma, j) from the shared bank.
double critical_value(stats::TestKind kind, const LimitSpec& spec, double alpha);

/// Same quantile from full path simulation (slow reference path).
double critical_value_direct(stats::TestKind kind, const LimitSpec& spec, double alpha);

struct EnvelopeRow {
    double c = 0.0;
    double envelope = 0.0;
    double envelope_se = 0.0;
    double kappa = 0.0;
    std::vector<double> test_power;  ///< one entry per compare kind
    std::vector<double> test_se;     ///< includes the error of the estimated critical value
};

struct EnvelopeResult {
    stats::TrendCase trend = stats::TrendCase::InterceptOnly;
    double alpha = 0.05;
    Index reps = 0;
    std::vector<stats::TestKind> kinds;
    std::vector<EnvelopeRow> rows;
};

/// Point-optimal power at C = c * direction for every c, with the limit power
/// of the compare kinds evaluated on the same draws.
EnvelopeResult power_envelope(const LimitSpec& spec, stats::TrendCase trend, const std::vector<double>& c_grid,
                              double alpha, const std::vector<stats::TestKind>& kinds, const Matrix& direction,
                              unsigned workers = 0);

struct LabfRow {
    Index T = 0;
    double mean_finite = 0.0;
    double var_finite = 0.0;
    double mean_limit = 0.0;
    double var_limit = 0.0;
    double distance = 0.0;   ///< |mean gap| + |variance gap|
    double rms_gap = 0.0;    ///< root mean square pathwise gap
};

struct LabfReport {
    std::vector<LabfRow> rows;
    double exp_mean = 0.0;   ///< mean of exp(Delta - Q / 2) at the limit draw
    double exp_se = 0.0;
    Index reps = 0;
    Index grid_n = 0;
};

/// Gaussian central sequences at each T against the limit on a common fine
/// grid (grid_n must be a multiple of every T).
LabfReport labf_diagnostic(const std::vector<Index>& T_list, const LimitSpec& spec, const Matrix& C,
                           unsigned workers = 0);

}  // namespace coint::limit
