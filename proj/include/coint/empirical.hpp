#pragma once

#include "coint/dgp.hpp"
#include "coint/linalg.hpp"
#include "coint/score_kde.hpp"

namespace coint::emp {

/// Piecewise-constant p-dimensional path on nodes k = 0..n.
///
/// Node k sits at clock time u_k = (k - origin)^+ / (n - origin). Feasible
/// processes start their sums at t = 2 and use origin 1; simulated limit
/// paths use origin 0, so u_k = k / n.
struct StepProcess {
    Matrix values;    ///< p x (n + 1); column 0 is zero
    Index origin = 0;

    StepProcess() = default;
    StepProcess(Matrix v, Index origin_) : values(std::move(v)), origin(origin_) {}

    Index dim() const { return values.rows(); }
    Index grid() const { return values.cols() - 1; }
    double clock(Index k) const;
    /// u_{k+1} - u_k for k = 0..n-1.
    Vector clock_weights() const;
    Vector at_end() const { return values.col(grid()); }
    /// sum_k values_k du_k.
    Vector time_average() const;
    void validate() const;
};

bool same_grid(const StepProcess& a, const StepProcess& b);

/// Value at node k is T^{-1/2} times the sum of the first k - 1 increments
/// (increment t - 2 holds the change from t - 1 to t). Grid T = cols + 1.
StepProcess partial_sum(const Matrix& increments);

/// P_k - u_k P_n. The endpoint is exactly zero.
StepProcess bridge(const StepProcess& proc);

/// bridge(partial_sum(increments)) evaluated with integer-weighted numerators
/// so that a constant added to every increment cancels in exact arithmetic.
StepProcess bridged_partial_sum(const Matrix& increments);

/// Centered covariance of the differences, divisor T - 1.
Matrix sigma_hat(const dgp::Panel& panel);
Matrix sigma_hat_from_differences(const Matrix& diffs);

struct PluginSet {
    StepProcess w_eps;  ///< partial sums of the differences
    StepProcess b_eps;  ///< bridged partial sums of the differences
    StepProcess b_lf;   ///< bridged partial sums of the scores
    Matrix sigma_hat;
    Matrix j_hat;
};

PluginSet build_plugins(const dgp::Panel& panel, const kde::ScoreSet& scores, const Matrix& j_hat,
                        const Matrix& sigma_hat);

}  // namespace coint::emp
