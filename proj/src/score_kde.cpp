#include "coint/score_kde.hpp"

#include <cmath>
#include <numbers>
#include <limits>
#include <vector>

#include "coint/error.hpp"

namespace coint::kde {

namespace {

constexpr double kDensityFloor = 1e-300;

struct Kernel {
    double density;
    double half_tanh;  // tanh(z / 2) = -k'(z) / k(z)
};

Kernel logistic(double z) {
    const double e = std::exp(-std::abs(z));
    const double s = 1.0 + e;
    const double th = (1.0 - e) / s;
    return {e / (s * s), z < 0.0 ? -th : th};
}

// Shared core: returns (sum of kernel weights, weighted tanh sums / a_i).
double accumulate(const double* point, const Matrix& data, const Vector& a, double* grad) {
    const Index p = data.rows();
    const Index n = data.cols();
    std::vector<double> th(static_cast<std::size_t>(p));
    double total = 0.0;
    for (Index i = 0; i < p; ++i) grad[i] = 0.0;
    for (Index s = 0; s < n; ++s) {
        double w = 1.0;
        for (Index i = 0; i < p; ++i) {
            const Kernel k = logistic((point[i] - data(i, s)) / a(i));
            w *= k.density;
            th[static_cast<std::size_t>(i)] = k.half_tanh;
        }
        total += w;
        for (Index i = 0; i < p; ++i) grad[i] += w * th[static_cast<std::size_t>(i)];
    }
    for (Index i = 0; i < p; ++i) grad[i] /= a(i);
    return total;
}

}  // namespace

void KdeConfig::validate(Index p) const {
    if (bandwidths.size() != p) throw Error("bandwidth vector has wrong length", "kde");
    for (Index i = 0; i < p; ++i)
        if (!(bandwidths(i) > 0.0) || !std::isfinite(bandwidths(i))) throw Error("bandwidths must be positive", "kde");
    if (!(floor >= 0.0) || !std::isfinite(floor)) throw Error("floor must be non-negative", "kde");
}

double logistic_density(double z) { return logistic(z).density; }

Vector silverman_bandwidths(const Matrix& sigma_hat, Index T, Index p) {
    if (sigma_hat.rows() != p || sigma_hat.cols() != p) throw Error("sigma_hat must be p x p", "kde");
    if (T < 1) throw Error("T must be positive", "kde");
    const double factor = std::pow(4.0 / (static_cast<double>(T) * static_cast<double>(p + 2)),
                                   2.0 / static_cast<double>(p + 4));
    Vector a(p);
    for (Index i = 0; i < p; ++i) {
        if (!(sigma_hat(i, i) > 0.0)) throw Error("non-positive variance on the diagonal", "kde");
        a(i) = factor * sigma_hat(i, i);
    }
    return a;
}

std::string to_string(BandwidthRule rule) {
    switch (rule) {
        case BandwidthRule::Silverman: return "silverman";
        case BandwidthRule::Logistic: return "logistic";
        case BandwidthRule::Literal: return "literal";
    }
    return "silverman";
}

BandwidthRule parse_bandwidth_rule(const std::string& name) {
    if (name == "silverman") return BandwidthRule::Silverman;
    if (name == "logistic") return BandwidthRule::Logistic;
    if (name == "literal") return BandwidthRule::Literal;
    throw Error("unknown bandwidth rule '" + name + "'", "kde");
}

Vector bandwidths(const Matrix& sigma_hat, Index T, Index p, BandwidthRule rule) {
    if (rule == BandwidthRule::Literal) return silverman_bandwidths(sigma_hat, T, p);
    // sqrt of the literal factor times sd; the logistic kernel has sd pi / sqrt(3)
    const Vector lit = silverman_bandwidths(sigma_hat, T, p);
    Vector a(p);
    const double scale = rule == BandwidthRule::Logistic ? std::sqrt(3.0) / std::numbers::pi : 1.0;
    for (Index i = 0; i < p; ++i) a(i) = scale * std::sqrt(lit(i));
    return a;
}

double kde_density(const Vector& point, const Matrix& data, const KdeConfig& config) {
    const Index p = data.rows();
    config.validate(p);
    if (point.size() != p) throw Error("point has wrong dimension", "kde");
    if (data.cols() < 1) throw Error("no data", "kde");
    Vector grad(p);
    const double total = accumulate(point.data(), data, config.bandwidths, grad.data());
    return total / (static_cast<double>(data.cols()) * config.bandwidths.prod());
}

Vector kde_score(const Vector& point, const Matrix& data, const KdeConfig& config, bool* underflow) {
    const Index p = data.rows();
    config.validate(p);
    if (point.size() != p) throw Error("point has wrong dimension", "kde");
    if (data.cols() < 1) throw Error("no data", "kde");
    Vector grad(p);
    const double total = accumulate(point.data(), data, config.bandwidths, grad.data());
    const double scale = static_cast<double>(data.cols()) * config.bandwidths.prod();
    const double denom = total + config.floor * scale;
    if (underflow) *underflow = false;
    if (!(denom / scale > kDensityFloor)) {
        if (underflow) *underflow = true;
        return Vector::Zero(p);
    }
    return grad / denom;
}

ScoreSet score_set_from_differences(const Matrix& diffs, const KdeConfig& config) {
    const Index p = diffs.rows();
    const Index n = diffs.cols();
    config.validate(p);
    if (n < 2) throw Error("need at least two differences", "kde");
    // Each unordered pair is visited once: the kernel weight is symmetric and
    // the tanh factor flips sign between the two evaluation points.
    const Vector& a = config.bandwidths;
    Matrix scaled(p, n);
    for (Index t = 0; t < n; ++t)
        for (Index i = 0; i < p; ++i) scaled(i, t) = diffs(i, t) / a(i);
    Vector total = Vector::Zero(n);
    Matrix grad = Matrix::Zero(p, n);
    const double self = std::pow(0.25, static_cast<double>(p));
    std::vector<double> th(static_cast<std::size_t>(p));
    for (Index t = 0; t < n; ++t) {
        total(t) += self;
        const double* xt = scaled.col(t).data();
        for (Index s = t + 1; s < n; ++s) {
            const double* xs = scaled.col(s).data();
            double w = 1.0;
            for (Index i = 0; i < p; ++i) {
                const Kernel k = logistic(xt[i] - xs[i]);
                w *= k.density;
                th[static_cast<std::size_t>(i)] = k.half_tanh;
            }
            total(t) += w;
            total(s) += w;
            for (Index i = 0; i < p; ++i) {
                const double g = w * th[static_cast<std::size_t>(i)];
                grad(i, t) += g;
                grad(i, s) -= g;
            }
        }
    }
    ScoreSet out;
    out.config = config;
    out.scores.resize(p, n);
    const double scale = static_cast<double>(n) * a.prod();
    for (Index t = 0; t < n; ++t) {
        const double denom = total(t) + config.floor * scale;
        if (!(denom / scale > kDensityFloor)) {
            ++out.underflows;
            out.scores.col(t).setZero();
            continue;
        }
        for (Index i = 0; i < p; ++i) out.scores(i, t) = grad(i, t) / a(i) / denom;
    }
    out.degenerate = true;
    for (Index t = 1; t < n && out.degenerate; ++t)
        if (out.scores.col(t) != out.scores.col(0)) out.degenerate = false;
    return out;
}

ScoreSet score_set(const dgp::Panel& panel, const KdeConfig& config) {
    if (panel.length() < 3) throw Error("panel needs T >= 3", "kde");
    return score_set_from_differences(panel.differences(), config);
}

void normalize_scores(ScoreSet& scores, const Matrix& diffs) {
    Matrix& s = scores.scores;
    if (diffs.rows() != s.rows() || diffs.cols() != s.cols()) throw Error("scores and differences differ in shape", "kde");
    if (scores.degenerate || s.isZero(0.0)) throw Error("degenerate scores", "kde");
    const Matrix sc = s.colwise() - s.rowwise().mean();
    const Matrix dc = diffs.colwise() - diffs.rowwise().mean();
    const Matrix k = sc * dc.transpose() / static_cast<double>(s.cols());
    const Eigen::FullPivLU<Matrix> lu(k);
    if (!lu.isInvertible() || 1.0 / lu.rcond() > 1e12) throw Error("degenerate scores", "kde");
    s = lu.solve(s).eval();
}

Matrix fisher_info_hat(const ScoreSet& scores) {
    const Matrix& s = scores.scores;
    const Index n = s.cols();
    if (n < 2) throw Error("need at least two score columns", "kde");
    if (scores.degenerate || s.isZero(0.0)) throw Error("degenerate scores", "kde");
    const Vector mean = s.rowwise().mean();
    const Matrix centered = s.colwise() - mean;
    Matrix j = centered * centered.transpose() / static_cast<double>(n);
    j = 0.5 * (j + j.transpose());
    if (j.isZero(0.0)) throw Error("degenerate scores", "kde");
    return j;
}

}  // namespace coint::kde
