#include "coint/limit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "coint/error.hpp"
#include "coint/parallel.hpp"
#include "coint/rng.hpp"

namespace coint::limit {

namespace {

constexpr const char* kStage = "limit";
constexpr double kSnap = 1e-9;

Matrix block_matrix(const Matrix& sigma, const Matrix& j) {
    const Index p = sigma.rows();
    Matrix b(2 * p, 2 * p);
    b << sigma, Matrix::Identity(p, p), Matrix::Identity(p, p), j;
    return b;
}

// Running sums of z / sqrt(n), z given per step as columns.
struct NormalPaths {
    Matrix z1;  // p x (n + 1)
    Matrix z2;
};

void bridge_in_place(Matrix& v) {
    const Index n = v.cols() - 1;
    const Vector end = v.col(n);
    for (Index k = 0; k <= n; ++k) v.col(k) -= (static_cast<double>(k) / static_cast<double>(n)) * end;
    v.col(n).setZero();
}

double quantile_upper(std::vector<double> values, double alpha) {
    return linalg::empirical_quantile(values, 1.0 - alpha);
}

double rate_above(const std::vector<double>& values, double threshold) {
    std::size_t hits = 0;
    for (double v : values)
        if (v > threshold) ++hits;
    return static_cast<double>(hits) / static_cast<double>(values.size());
}

// Standard error of rate_above(alt, q) when q is the estimated upper alpha
// quantile of an independent null sample. The quantile error enters through
// the slope of the alternative rate in the null tail probability.
double power_se(const std::vector<double>& null, const std::vector<double>& alt, double alpha, double rate) {
    const double d = std::min(0.01, 0.5 * std::min(alpha, 1.0 - alpha));
    const double lo = quantile_upper(null, alpha + d);
    const double hi = quantile_upper(null, alpha - d);
    const double slope = (rate_above(alt, lo) - rate_above(alt, hi)) / (2.0 * d);
    const double var = rate * (1.0 - rate) / static_cast<double>(alt.size()) +
                       slope * slope * alpha * (1.0 - alpha) / static_cast<double>(null.size());
    return std::sqrt(var);
}

}  // namespace

void LimitSpec::validate() const {
    if (sigma.rows() == 0 || sigma.rows() != sigma.cols()) throw Error("sigma must be square", kStage);
    if (j.rows() != sigma.rows() || j.cols() != sigma.cols()) throw Error("j must match sigma", kStage);
    if (grid_n < 100) throw Error("grid_n must be at least 100", kStage);
    if (reps < 1) throw Error("reps must be positive", kStage);
    coordinates(sigma, j);
}

Coordinates coordinates(const Matrix& sigma, const Matrix& j) {
    if (!linalg::is_symmetric(sigma, 1e-10) || !linalg::is_symmetric(j, 1e-10))
        throw Error("sigma and j must be symmetric", kStage);
    Coordinates out;
    out.L = linalg::cholesky_lower(sigma, "sigma not positive definite");
    if (linalg::min_eigenvalue(block_matrix(sigma, j)) < -1e-10) throw Error("incoherent (Σ, J) pair", kStage);
    const Matrix K = out.L.transpose() * j * out.L;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (K + K.transpose()));
    out.Q = es.eigenvectors();
    out.k = es.eigenvalues();
    for (Index i = 0; i < out.k.size(); ++i) {
        if (out.k(i) < 1.0 - kSnap) out.clipped = true;
        if (out.k(i) < 1.0 + kSnap) out.k(i) = 1.0;
    }
    return out;
}

Matrix project_information(const Matrix& sigma, const Matrix& j, bool* changed) {
    const Matrix L = linalg::cholesky_lower(sigma, "sigma not positive definite");
    const Matrix K = L.transpose() * (0.5 * (j + j.transpose())) * L;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (K + K.transpose()));
    Vector k = es.eigenvalues();
    bool moved = false;
    for (Index i = 0; i < k.size(); ++i) {
        if (k(i) < 1.0) {
            moved = true;
            k(i) = 1.0;
        }
    }
    if (changed) *changed = moved;
    if (!moved) return 0.5 * (j + j.transpose());
    const Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(L.rows(), L.cols()));
    const Matrix F = Linv.transpose() * es.eigenvectors();
    Matrix out = F * k.asDiagonal() * F.transpose();
    return 0.5 * (out + out.transpose());
}

stats::LrInputs LimitDraw::inputs(const Matrix& sigma, const Matrix& j) const {
    stats::LrInputs in;
    in.w = w_eps;
    in.h = emp::bridge(w_lf);
    in.sigma = sigma;
    in.j = j;
    return in;
}

LimitDraw simulate_ou(const LimitSpec& spec, const Matrix& C, const Vector& delta, std::uint64_t rep_seed) {
    spec.validate();
    const Index p = spec.sigma.rows();
    const Index n = spec.grid_n;
    if (C.rows() != p || C.cols() != p || delta.size() != p) throw Error("C and delta must match p", kStage);
    const Coordinates co = coordinates(spec.sigma, spec.j);
    const Matrix Linv = co.L.triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));
    const double root = 1.0 / std::sqrt(static_cast<double>(n));
    const Matrix E = co.L * co.Q * root;
    const Matrix F = Linv.transpose() * co.Q * root;
    const Matrix Jc = (Linv.transpose() * co.Q) * co.k.asDiagonal() * (Linv.transpose() * co.Q).transpose();
    const Vector d = (co.k.array() - 1.0).max(0.0).sqrt().matrix();
    const bool drift = !C.isZero(0.0) || !delta.isZero(0.0);
    const double step = 1.0 / static_cast<double>(n);

    LimitDraw out;
    out.w_eps = emp::StepProcess(Matrix::Zero(p, n + 1), 0);
    out.w_lf = emp::StepProcess(Matrix::Zero(p, n + 1), 0);
    double* we = out.w_eps.values.data();
    double* wl = out.w_lf.values.data();
    Rng rng(rep_seed);
    std::vector<double> z1(static_cast<std::size_t>(p)), mix(static_cast<std::size_t>(p)),
        dr(static_cast<std::size_t>(p)), cd(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) {
        double acc = 0.0;
        for (Index l = 0; l < p; ++l) acc += C(i, l) * delta(l);
        cd[static_cast<std::size_t>(i)] = acc;
    }
    for (Index k = 0; k < n; ++k) {
        for (Index i = 0; i < p; ++i) z1[static_cast<std::size_t>(i)] = rng.normal();
        for (Index i = 0; i < p; ++i) mix[static_cast<std::size_t>(i)] = z1[static_cast<std::size_t>(i)] + d(i) * rng.normal();
        const double* w0 = we + k * p;
        const double* l0 = wl + k * p;
        double* w1 = we + (k + 1) * p;
        double* l1 = wl + (k + 1) * p;
        for (Index i = 0; i < p; ++i) {
            double a = 0.0, b = 0.0;
            for (Index l = 0; l < p; ++l) {
                a += E(i, l) * z1[static_cast<std::size_t>(l)];
                b += F(i, l) * mix[static_cast<std::size_t>(l)];
            }
            w1[i] = w0[i] + a;
            l1[i] = l0[i] + b;
        }
        if (drift) {
            const double u = static_cast<double>(k) * step;
            for (Index i = 0; i < p; ++i) {
                double acc = 0.0;
                for (Index l = 0; l < p; ++l) acc += C(i, l) * w0[l];
                dr[static_cast<std::size_t>(i)] = acc + delta(i) - u * cd[static_cast<std::size_t>(i)];
            }
            for (Index i = 0; i < p; ++i) {
                double acc = 0.0;
                for (Index l = 0; l < p; ++l) acc += Jc(i, l) * dr[static_cast<std::size_t>(l)];
                w1[i] += dr[static_cast<std::size_t>(i)] * step;
                l1[i] += acc * step;
            }
        }
    }
    return out;
}

LimitDraw draw_null_paths(const LimitSpec& spec, std::uint64_t rep_seed) {
    const Index p = spec.sigma.rows();
    return simulate_ou(spec, Matrix::Zero(p, p), Vector::Zero(p), rep_seed);
}

NullBank::NullBank(Index p, stats::TrendCase trend, Index grid_n, Index reps, std::uint64_t seed, unsigned workers)
    : p_(p), trend_(trend) {
    if (p < 1) throw Error("dimension must be positive", kStage);
    if (grid_n < 100) throw Error("grid_n must be at least 100", kStage);
    if (reps < 1) throw Error("reps must be positive", kStage);
    const auto R = static_cast<std::size_t>(reps);
    a_.resize(R);
    m_.resize(R);
    s1_.resize(R);
    s2_.resize(R);
    const Index n = grid_n;
    const double root = 1.0 / std::sqrt(static_cast<double>(n));
    const Vector du = Vector::Constant(n, 1.0 / static_cast<double>(n));
    parallel_for(R, workers, [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        Matrix z1 = Matrix::Zero(p, n + 1);
        Matrix z2 = Matrix::Zero(p, n + 1);
        for (Index k = 0; k < n; ++k) {
            for (Index i = 0; i < p; ++i) z1(i, k + 1) = z1(i, k) + root * rng.normal();
            for (Index i = 0; i < p; ++i) z2(i, k + 1) = z2(i, k) + root * rng.normal();
        }
        bridge_in_place(z2);
        if (trend == stats::TrendCase::LinearTrend) bridge_in_place(z1);
        const auto lead = z1.leftCols(n);
        const Matrix dg1 = z1.rightCols(n) - z1.leftCols(n);
        const Matrix dg2 = z2.rightCols(n) - z2.leftCols(n);
        a_[r] = lead * lead.transpose() / static_cast<double>(n);
        m_[r] = lead * du;
        s1_[r] = dg1 * lead.transpose();
        s2_[r] = dg2 * lead.transpose();
    });
}

double NullBank::statistic(Index r, const Vector& k) const {
    const auto i = static_cast<std::size_t>(r);
    const Index p = p_;
    if (k.size() != p) throw Error("eigenvalue vector has wrong length", kStage);
    const Vector d = (k.array() - 1.0).max(0.0).sqrt().matrix();
    const Matrix S = s1_[i] + d.asDiagonal() * s2_[i];
    const Matrix K = k.asDiagonal();
    stats::QuadraticForm q;
    q.s = Eigen::Map<const Vector>(S.data(), S.size());
    q.M = stats::kron(a_[i], K) + stats::kron(m_[i] * m_[i].transpose(), Matrix::Identity(p, p) - K);
    return q.maximum();
}

std::vector<double> NullBank::statistics(const Vector& k) const {
    std::vector<double> out(a_.size());
    for (std::size_t r = 0; r < a_.size(); ++r) out[r] = statistic(static_cast<Index>(r), k);
    return out;
}

std::shared_ptr<const NullBank> shared_bank(Index p, stats::TrendCase trend, Index grid_n, Index reps,
                                            std::uint64_t seed) {
    using Key = std::tuple<Index, int, Index, Index, std::uint64_t>;
    static std::mutex mutex;
    static std::map<Key, std::shared_ptr<const NullBank>> banks;
    const Key key{p, static_cast<int>(trend), grid_n, reps, seed};
    std::lock_guard<std::mutex> lock(mutex);
    auto it = banks.find(key);
    if (it != banks.end()) return it->second;
    auto bank = std::make_shared<const NullBank>(p, trend, grid_n, reps, seed);
    banks.emplace(key, bank);
    return bank;
}

Vector kind_eigenvalues(stats::TestKind kind, const Matrix& sigma, const Matrix& j) {
    if (stats::flavor_of(kind) == stats::Flavor::Gaussian) return Vector::Ones(sigma.rows());
    return coordinates(sigma, j).k;
}

double critical_value(stats::TestKind kind, const LimitSpec& spec, double alpha) {
    spec.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)", kStage);
    const auto bank = shared_bank(spec.sigma.rows(), stats::trend_of(kind), spec.grid_n, spec.reps, spec.seed);
    return quantile_upper(bank->statistics(kind_eigenvalues(kind, spec.sigma, spec.j)), alpha);
}

double critical_value_direct(stats::TestKind kind, const LimitSpec& spec, double alpha) {
    spec.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)", kStage);
    const Matrix j = project_information(spec.sigma, spec.j);
    std::vector<double> values(static_cast<std::size_t>(spec.reps));
    parallel_for(values.size(), 0, [&](std::size_t r) {
        const LimitDraw draw = draw_null_paths(spec, derive_seed(spec.seed, r));
        values[r] = stats::statistic(kind, draw.inputs(spec.sigma, j));
    });
    return quantile_upper(std::move(values), alpha);
}

EnvelopeResult power_envelope(const LimitSpec& spec, stats::TrendCase trend, const std::vector<double>& c_grid,
                              double alpha, const std::vector<stats::TestKind>& kinds, const Matrix& direction,
                              unsigned workers) {
    spec.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)", kStage);
    const Index p = spec.sigma.rows();
    if (direction.rows() != p || direction.cols() != p) throw Error("direction must be p x p", kStage);
    const Matrix j = project_information(spec.sigma, spec.j);
    const auto R = static_cast<std::size_t>(spec.reps);
    const std::size_t nc = c_grid.size();
    const std::size_t nk = kinds.size();

    auto lr = [&](const stats::LikelihoodSummary& s, const Matrix& C) {
        return trend == stats::TrendCase::InterceptOnly ? s.l_mu_star(C) : s.l_tau_star(C, C);
    };

    std::vector<std::vector<double>> lr_null(nc, std::vector<double>(R));
    std::vector<std::vector<double>> lr_alt(nc, std::vector<double>(R));
    std::vector<std::vector<double>> t_null(nk, std::vector<double>(R));
    std::vector<std::vector<std::vector<double>>> t_alt(nc, std::vector<std::vector<double>>(nk, std::vector<double>(R)));

    parallel_for(R, workers, [&](std::size_t r) {
        const LimitDraw null_draw = draw_null_paths(spec, derive_seed(spec.seed, r, 0));
        const stats::LrInputs in0 = null_draw.inputs(spec.sigma, j);
        const stats::LikelihoodSummary s0 = stats::summarize(in0);
        for (std::size_t ci = 0; ci < nc; ++ci) lr_null[ci][r] = lr(s0, c_grid[ci] * direction);
        for (std::size_t ki = 0; ki < nk; ++ki) t_null[ki][r] = stats::statistic(kinds[ki], in0);
        for (std::size_t ci = 0; ci < nc; ++ci) {
            const Matrix C = c_grid[ci] * direction;
            const LimitDraw alt = simulate_ou(spec, C, Vector::Zero(p), derive_seed(spec.seed, r, 1));
            const stats::LrInputs in1 = alt.inputs(spec.sigma, j);
            lr_alt[ci][r] = lr(stats::summarize(in1), C);
            for (std::size_t ki = 0; ki < nk; ++ki) t_alt[ci][ki][r] = stats::statistic(kinds[ki], in1);
        }
    });

    EnvelopeResult out;
    out.trend = trend;
    out.alpha = alpha;
    out.reps = spec.reps;
    out.kinds = kinds;
    std::vector<double> t_crit(nk);
    for (std::size_t ki = 0; ki < nk; ++ki) t_crit[ki] = quantile_upper(t_null[ki], alpha);
    for (std::size_t ci = 0; ci < nc; ++ci) {
        EnvelopeRow row;
        row.c = c_grid[ci];
        if (c_grid[ci] == 0.0 || direction.isZero(0.0)) {
            // The point-optimal statistic is identically zero at the null.
            row.kappa = 0.0;
            row.envelope = alpha;
            row.envelope_se = 0.0;
        } else {
            row.kappa = quantile_upper(lr_null[ci], alpha);
            row.envelope = rate_above(lr_alt[ci], row.kappa);
            row.envelope_se = power_se(lr_null[ci], lr_alt[ci], alpha, row.envelope);
        }
        for (std::size_t ki = 0; ki < nk; ++ki) {
            const double rate = rate_above(t_alt[ci][ki], t_crit[ki]);
            row.test_power.push_back(rate);
            row.test_se.push_back(power_se(t_null[ki], t_alt[ci][ki], alpha, rate));
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

LabfReport labf_diagnostic(const std::vector<Index>& T_list, const LimitSpec& spec, const Matrix& C,
                           unsigned workers) {
    spec.validate();
    const Index p = spec.sigma.rows();
    const Index n = spec.grid_n;
    if (C.rows() != p || C.cols() != p) throw Error("C must be p x p", kStage);
    for (Index T : T_list)
        if (T < 2 || n % T != 0) throw Error("grid_n must be a multiple of every T", kStage);
    const Matrix L = linalg::cholesky_lower(spec.sigma, "sigma not positive definite");
    const Matrix si = linalg::spd_inverse(spec.sigma, "sigma not positive definite");
    const Matrix weight = C.transpose() * si;  // (C x)' sigma^{-1} e = x' weight e
    const Matrix qweight = C.transpose() * si * C;
    const auto R = static_cast<std::size_t>(spec.reps);
    const std::size_t nt = T_list.size();
    std::vector<double> lim(R), expl(R);
    std::vector<std::vector<double>> fin(nt, std::vector<double>(R));

    parallel_for(R, workers, [&](std::size_t r) {
        Rng rng(derive_seed(spec.seed, r, 2));
        const double root = 1.0 / std::sqrt(static_cast<double>(n));
        Matrix dw(p, n);
        std::vector<double> z(static_cast<std::size_t>(p));
        for (Index k = 0; k < n; ++k) {
            for (Index i = 0; i < p; ++i) z[static_cast<std::size_t>(i)] = rng.normal();
            for (Index i = 0; i < p; ++i) {
                double acc = 0.0;
                for (Index l = 0; l <= i; ++l) acc += L(i, l) * z[static_cast<std::size_t>(l)];
                dw(i, k) = acc * root;
            }
        }
        std::vector<double> w(static_cast<std::size_t>(p), 0.0);
        double delta = 0.0;
        double q = 0.0;
        for (Index k = 0; k < n; ++k) {
            for (Index i = 0; i < p; ++i) {
                const double wi = w[static_cast<std::size_t>(i)];
                for (Index l = 0; l < p; ++l) {
                    delta += wi * weight(i, l) * dw(l, k);
                    q += wi * qweight(i, l) * w[static_cast<std::size_t>(l)];
                }
            }
            for (Index i = 0; i < p; ++i) w[static_cast<std::size_t>(i)] += dw(i, k);
        }
        q /= static_cast<double>(n);
        lim[r] = delta;
        expl[r] = std::exp(delta - 0.5 * q);
        for (std::size_t ti = 0; ti < nt; ++ti) {
            const Index T = T_list[ti];
            const Index block = n / T;
            const double scale = std::sqrt(static_cast<double>(T));
            Vector x = Vector::Zero(p);  // y_{t-1} - y_1
            Vector e(p);
            double acc = 0.0;
            for (Index t = 1; t <= T; ++t) {
                e = dw.middleCols((t - 1) * block, block).rowwise().sum() * scale;
                if (t >= 2) {
                    acc += x.dot(weight * e);
                    x += e;
                }
            }
            fin[ti][r] = acc / static_cast<double>(T);
        }
    });

    auto moments = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size() - 1);
        return std::pair{mean, var};
    };
    LabfReport out;
    out.reps = spec.reps;
    out.grid_n = n;
    const auto [ml, vl] = moments(lim);
    for (std::size_t ti = 0; ti < nt; ++ti) {
        LabfRow row;
        row.T = T_list[ti];
        std::tie(row.mean_finite, row.var_finite) = moments(fin[ti]);
        row.mean_limit = ml;
        row.var_limit = vl;
        row.distance = std::abs(row.mean_finite - ml) + std::abs(row.var_finite - vl);
        double ss = 0.0;
        for (std::size_t r = 0; r < R; ++r) ss += (fin[ti][r] - lim[r]) * (fin[ti][r] - lim[r]);
        row.rms_gap = std::sqrt(ss / static_cast<double>(R));
        out.rows.push_back(row);
    }
    const auto [me, ve] = moments(expl);
    out.exp_mean = me;
    out.exp_se = std::sqrt(ve / static_cast<double>(R));
    return out;
}

}  // namespace coint::limit
