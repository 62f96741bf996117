#include "coint/empirical.hpp"

#include <cmath>

#include "coint/error.hpp"

namespace coint::emp {

double StepProcess::clock(Index k) const {
    const Index n = grid();
    if (k <= origin) return 0.0;
    return static_cast<double>(k - origin) / static_cast<double>(n - origin);
}

Vector StepProcess::clock_weights() const {
    const Index n = grid();
    Vector w(n);
    for (Index k = 0; k < n; ++k) w(k) = clock(k + 1) - clock(k);
    return w;
}

Vector StepProcess::time_average() const {
    const Index n = grid();
    return values.leftCols(n) * clock_weights();
}

void StepProcess::validate() const {
    if (values.cols() < 2) throw Error("step process needs at least one step", "process");
    if (origin < 0 || origin >= grid()) throw Error("origin outside grid", "process");
    if (!values.col(0).isZero(0.0)) throw Error("step process must start at zero", "process");
}

bool same_grid(const StepProcess& a, const StepProcess& b) {
    return a.values.cols() == b.values.cols() && a.origin == b.origin;
}

StepProcess partial_sum(const Matrix& increments) {
    const Index p = increments.rows();
    const Index m = increments.cols();
    if (m < 2) throw Error("need T >= 3", "partial_sum");
    const Index T = m + 1;
    const double scale = 1.0 / std::sqrt(static_cast<double>(T));
    Matrix v = Matrix::Zero(p, T + 1);
    Vector run = Vector::Zero(p);
    for (Index k = 2; k <= T; ++k) {
        run += increments.col(k - 2);
        v.col(k) = run * scale;
    }
    return {std::move(v), 1};
}

StepProcess bridge(const StepProcess& proc) {
    proc.validate();
    const Index n = proc.grid();
    StepProcess out = proc;
    const Vector end = proc.at_end();
    for (Index k = 0; k <= n; ++k) out.values.col(k) = proc.values.col(k) - proc.clock(k) * end;
    out.values.col(n).setZero();
    return out;
}

StepProcess bridged_partial_sum(const Matrix& increments) {
    const Index p = increments.rows();
    const Index m = increments.cols();
    if (m < 2) throw Error("need T >= 3", "bridge");
    const Index T = m + 1;
    Matrix raw = Matrix::Zero(p, T + 1);
    for (Index k = 2; k <= T; ++k) raw.col(k) = raw.col(k - 1) + increments.col(k - 2);
    const double scale = 1.0 / (static_cast<double>(T - 1) * std::sqrt(static_cast<double>(T)));
    const double steps = static_cast<double>(T - 1);
    Matrix v = Matrix::Zero(p, T + 1);
    for (Index k = 2; k < T; ++k) {
        const double done = static_cast<double>(k - 1);
        for (Index i = 0; i < p; ++i) v(i, k) = (steps * raw(i, k) - done * raw(i, T)) * scale;
    }
    return {std::move(v), 1};
}

Matrix sigma_hat_from_differences(const Matrix& diffs) {
    const Index n = diffs.cols();
    if (n < 2) throw Error("need T >= 3", "sigma_hat");
    const Vector mean = diffs.rowwise().mean();
    const Matrix centered = diffs.colwise() - mean;
    Matrix s = centered * centered.transpose() / static_cast<double>(n);
    s = 0.5 * (s + s.transpose());
    const Vector eig = linalg::sym_eigenvalues(s);
    if (!(eig.minCoeff() > 1e-12 * std::max(eig.maxCoeff(), 0.0)) || !(eig.maxCoeff() > 0.0))
        throw Error("degenerate panel", "sigma_hat");
    return s;
}

Matrix sigma_hat(const dgp::Panel& panel) { return sigma_hat_from_differences(panel.differences()); }

PluginSet build_plugins(const dgp::Panel& panel, const kde::ScoreSet& scores, const Matrix& j_hat,
                        const Matrix& sigma_hat) {
    const Index p = panel.dim();
    const Matrix diffs = panel.differences();
    if (scores.scores.rows() != p || scores.scores.cols() != diffs.cols())
        throw Error("scores do not match the panel", "plugins");
    if (j_hat.rows() != p || j_hat.cols() != p || sigma_hat.rows() != p || sigma_hat.cols() != p)
        throw Error("plug-in matrices must be p x p", "plugins");
    PluginSet out;
    out.w_eps = partial_sum(diffs);
    out.b_eps = bridged_partial_sum(diffs);
    out.b_lf = bridged_partial_sum(scores.scores);
    out.sigma_hat = sigma_hat;
    out.j_hat = j_hat;
    return out;
}

}  // namespace coint::emp
