#include "coint/statistics.hpp"

#include <cmath>
#include <sstream>

#include "coint/error.hpp"

namespace coint::stats {

namespace {

constexpr const char* kStage = "statistic";

// H + sigma^{-1} end u.
emp::StepProcess shifted_integrator(const emp::StepProcess& h, const Matrix& sigma_inv, const Vector& end) {
    return add_drift(h, sigma_inv * end);
}

emp::StepProcess scaled(const Matrix& a, const emp::StepProcess& w) {
    return {a * w.values, w.origin};
}

Matrix sigma_inverse(const LrInputs& in) {
    return linalg::spd_inverse(in.sigma, "sigma not positive definite");
}

}  // namespace

std::string to_string(TrendCase t) { return t == TrendCase::InterceptOnly ? "none" : "linear"; }

std::string to_string(TestKind k) {
    switch (k) {
        case TestKind::JohansenGauss: return "johansen-gauss";
        case TestKind::JohansenSemipar: return "johansen-semipar";
        case TestKind::SLGauss: return "sl-gauss";
        case TestKind::SLSemipar: return "sl-semipar";
    }
    return "unknown";
}

TrendCase parse_trend(const std::string& s) {
    if (s == "none" || s == "intercept") return TrendCase::InterceptOnly;
    if (s == "linear" || s == "trend") return TrendCase::LinearTrend;
    throw Error("unknown trend case: " + s);
}

TestKind parse_test_kind(const std::string& s) {
    for (TestKind k : {TestKind::JohansenGauss, TestKind::JohansenSemipar, TestKind::SLGauss, TestKind::SLSemipar})
        if (s == to_string(k)) return k;
    throw Error("unknown test kind: " + s);
}

TrendCase trend_of(TestKind k) {
    return (k == TestKind::JohansenGauss || k == TestKind::JohansenSemipar) ? TrendCase::InterceptOnly
                                                                           : TrendCase::LinearTrend;
}

Flavor flavor_of(TestKind k) {
    return (k == TestKind::JohansenGauss || k == TestKind::SLGauss) ? Flavor::Gaussian : Flavor::Semiparametric;
}

void LrInputs::validate() const {
    w.validate();
    h.validate();
    const Index p = w.dim();
    if (!emp::same_grid(w, h) || h.dim() != p) throw Error("grid mismatch", kStage);
    if (sigma.rows() != p || sigma.cols() != p || j.rows() != p || j.cols() != p)
        throw Error("sigma and j must be p x p", kStage);
    if (!linalg::is_symmetric(sigma, 1e-10) || !linalg::is_symmetric(j, 1e-10))
        throw Error("sigma and j must be symmetric", kStage);
    if (w_bridge && (!emp::same_grid(*w_bridge, w) || w_bridge->dim() != p)) throw Error("grid mismatch", kStage);
}

emp::StepProcess LrInputs::bridged_w() const { return w_bridge ? *w_bridge : emp::bridge(w); }

LrInputs from_plugins(const emp::PluginSet& plugins) {
    LrInputs in;
    in.w = plugins.w_eps;
    in.h = plugins.b_lf;
    in.sigma = plugins.sigma_hat;
    in.j = plugins.j_hat;
    in.w_bridge = plugins.b_eps;
    return in;
}

Matrix ito_sum(const emp::StepProcess& integrand, const emp::StepProcess& integrator) {
    if (integrand.values.cols() != integrator.values.cols()) throw Error("grid mismatch", "ito_sum");
    const Index n = integrand.grid();
    const Matrix dh = integrator.values.rightCols(n) - integrator.values.leftCols(n);
    return integrand.values.leftCols(n) * dh.transpose();
}

emp::StepProcess add_drift(const emp::StepProcess& w, const Vector& slope) {
    emp::StepProcess out = w;
    for (Index k = 0; k <= w.grid(); ++k) out.values.col(k) += w.clock(k) * slope;
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

double QuadraticForm::value(const Matrix& C) const {
    const Eigen::Map<const Vector> v(C.data(), C.size());
    if (v.size() != s.size()) throw Error("C has wrong dimension", kStage);
    return v.dot(s) - 0.5 * v.dot(M * v);
}

namespace {

Eigen::LLT<Matrix> checked_factor(const Matrix& M) {
    const Matrix sym = 0.5 * (M + M.transpose());
    const Vector eig = linalg::sym_eigenvalues(sym);
    const double top = eig.cwiseAbs().maxCoeff();
    if (!eig.allFinite() || !(eig.minCoeff() > 1e-12 * top) || !(top > 0.0)) {
        std::ostringstream os;
        os << "degenerate information (eigenvalues " << eig.transpose() << ")";
        throw Error(os.str(), kStage);
    }
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() != Eigen::Success) throw Error("degenerate information", kStage);
    return llt;
}

}  // namespace

double QuadraticForm::maximum() const {
    const auto llt = checked_factor(M);
    return std::max(0.0, s.dot(llt.solve(s)));
}

Matrix QuadraticForm::argmax() const {
    const auto llt = checked_factor(M);
    const Vector v = llt.solve(s);
    const Index p = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(v.size()))));
    return Eigen::Map<const Matrix>(v.data(), p, p);
}

QuadraticForm quadratic_form(const emp::StepProcess& w, const emp::StepProcess& g, const Matrix& j,
                             const Matrix& sigma_inv) {
    if (w.values.cols() != g.values.cols()) throw Error("grid mismatch", kStage);
    const Index n = w.grid();
    const Vector du = w.clock_weights();
    const Matrix lead = w.values.leftCols(n);
    const Matrix dg = g.values.rightCols(n) - g.values.leftCols(n);
    const Matrix Smat = dg * lead.transpose();
    const Matrix A = lead * du.asDiagonal() * lead.transpose();
    const Vector mean = lead * du;
    QuadraticForm q;
    q.s = Eigen::Map<const Vector>(Smat.data(), Smat.size());
    q.M = kron(A, j) + kron(mean * mean.transpose(), sigma_inv - j);
    q.M = 0.5 * (q.M + q.M.transpose());
    return q;
}

double l_M(const Matrix& C, const Vector& delta, const LrInputs& in) {
    in.validate();
    const Index p = in.w.dim();
    const Index n = in.w.grid();
    const Matrix si = sigma_inverse(in);
    const emp::StepProcess g = shifted_integrator(in.h, si, in.w.at_end());
    const Vector du = in.w.clock_weights();
    const Matrix I = Matrix::Identity(p, p);
    double lin = 0.0;
    double quad = 0.0;
    Vector mean = Vector::Zero(p);
    for (Index k = 0; k < n; ++k) {
        const Vector x = C * in.w.values.col(k) + (I - in.w.clock(k) * C) * delta;
        lin += x.dot(g.values.col(k + 1) - g.values.col(k));
        quad += x.dot(in.j * x) * du(k);
        mean += x * du(k);
    }
    quad += mean.dot((si - in.j) * mean);
    return lin - 0.5 * quad;
}

double l_mu_star(const Matrix& C_bar, const LrInputs& in) {
    return l_M(C_bar, Vector::Zero(in.w.dim()), in);
}

Vector profile_delta(const Matrix& C_star, const LrInputs& in) {
    in.validate();
    const Index p = in.w.dim();
    const Index n = in.w.grid();
    const Matrix si = sigma_inverse(in);
    const emp::StepProcess g = shifted_integrator(in.h, si, in.w.at_end());
    const Vector du = in.w.clock_weights();
    const Matrix I = Matrix::Identity(p, p);
    Vector a = Vector::Zero(p);
    Matrix b = Matrix::Zero(p, p);
    Matrix d_mean = Matrix::Zero(p, p);
    Vector w_mean = Vector::Zero(p);
    for (Index k = 0; k < n; ++k) {
        const Matrix d = I - in.w.clock(k) * C_star;
        a += d.transpose() * (g.values.col(k + 1) - g.values.col(k));
        a -= d.transpose() * in.j * C_star * in.w.values.col(k) * du(k);
        b += d.transpose() * in.j * d * du(k);
        d_mean += d * du(k);
        w_mean += in.w.values.col(k) * du(k);
    }
    a -= d_mean.transpose() * (si - in.j) * C_star * w_mean;
    b += d_mean.transpose() * (si - in.j) * d_mean;
    b = 0.5 * (b + b.transpose());
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success || !(linalg::min_eigenvalue(b) > 0.0))
        throw Error("drift information not positive definite", kStage);
    return llt.solve(a);
}

double l_tau_star(const Matrix& C_bar, const Matrix& C_star, const LrInputs& in) {
    const Vector delta = profile_delta(C_star, in);
    const Matrix si = sigma_inverse(in);
    const emp::StepProcess wd = add_drift(in.w, -delta);
    const Vector end = wd.at_end();
    const emp::StepProcess g = shifted_integrator(in.h, si, end);
    const emp::StepProcess cw = scaled(C_bar, wd);
    const Index n = wd.grid();
    const Vector du = wd.clock_weights();
    double lin = ito_sum(cw, g).trace();
    double quad = 0.0;
    Vector mean = Vector::Zero(wd.dim());
    for (Index k = 0; k < n; ++k) {
        quad += cw.values.col(k).dot(in.j * cw.values.col(k)) * du(k);
        mean += cw.values.col(k) * du(k);
    }
    quad += mean.dot((si - in.j) * mean);
    return lin - 0.5 * quad - 0.5 * end.dot(si * end);
}

LikelihoodSummary summarize(const LrInputs& in) {
    in.validate();
    const Index n = in.w.grid();
    LikelihoodSummary out;
    out.sigma_inv = sigma_inverse(in);
    out.j = in.j;
    const emp::StepProcess g = shifted_integrator(in.h, out.sigma_inv, in.w.at_end());
    const Vector du = in.w.clock_weights();
    Vector u(n);
    for (Index k = 0; k < n; ++k) u(k) = in.w.clock(k);
    const Matrix lead = in.w.values.leftCols(n);
    const Matrix dg = g.values.rightCols(n) - g.values.leftCols(n);
    out.S0 = dg * lead.transpose();
    out.A0 = lead * du.asDiagonal() * lead.transpose();
    out.w_mean = lead * du;
    out.w_umean = lead * u.cwiseProduct(du);
    out.g_u = dg * u;
    out.g_end = g.at_end();
    out.u_mean = u.dot(du);
    out.u2_mean = u.cwiseProduct(u).dot(du);
    return out;
}

double LikelihoodSummary::l_M(const Matrix& C, const Vector& delta) const {
    const Vector cd = C * delta;
    const Vector cw = C * w_mean;
    const double lin = (C.cwiseProduct(S0)).sum() + delta.dot(g_end) - cd.dot(g_u);
    double quad = (C.transpose() * j * C * A0).trace();
    quad += 2.0 * (cw.dot(j * delta) - (C * w_umean).dot(j * cd));
    quad += delta.dot(j * delta) - 2.0 * u_mean * delta.dot(j * cd) + u2_mean * cd.dot(j * cd);
    const Vector xbar = cw + delta - u_mean * cd;
    quad += xbar.dot((sigma_inv - j) * xbar);
    return lin - 0.5 * quad;
}

double LikelihoodSummary::l_mu_star(const Matrix& C) const { return l_M(C, Vector::Zero(C.rows())); }

Vector LikelihoodSummary::profile_delta(const Matrix& C) const {
    const Index p = C.rows();
    const Matrix I = Matrix::Identity(p, p);
    const Matrix dbar = I - u_mean * C;
    const Matrix gap = sigma_inv - j;
    const Vector a = g_end - C.transpose() * g_u - (j * C * w_mean - C.transpose() * j * C * w_umean) -
                     dbar.transpose() * gap * C * w_mean;
    Matrix b = j - u_mean * (C.transpose() * j + j * C) + u2_mean * C.transpose() * j * C +
               dbar.transpose() * gap * dbar;
    b = 0.5 * (b + b.transpose());
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success) throw Error("drift information not positive definite", kStage);
    return llt.solve(a);
}

double LikelihoodSummary::l_tau_star(const Matrix& C_bar, const Matrix& C_star) const {
    const Index p = C_bar.rows();
    return l_M(C_bar, profile_delta(C_star)) - l_M(Matrix::Zero(p, p), profile_delta(Matrix::Zero(p, p)));
}

QuadraticForm johansen_form(const LrInputs& in, Flavor flavor) {
    in.validate();
    const Matrix si = sigma_inverse(in);
    if (flavor == Flavor::Gaussian) return quadratic_form(in.w, scaled(si, in.w), si, si);
    return quadratic_form(in.w, shifted_integrator(in.h, si, in.w.at_end()), in.j, si);
}

QuadraticForm sl_form(const LrInputs& in, Flavor flavor) {
    in.validate();
    const Matrix si = sigma_inverse(in);
    const emp::StepProcess b = in.bridged_w();
    if (flavor == Flavor::Gaussian) return quadratic_form(b, scaled(si, b), si, si);
    return quadratic_form(b, in.h, in.j, si);
}

double johansen_stat(const LrInputs& in, Flavor flavor) { return johansen_form(in, flavor).maximum(); }

double sl_stat(const LrInputs& in, Flavor flavor) { return sl_form(in, flavor).maximum(); }

double statistic(TestKind kind, const LrInputs& in) {
    switch (kind) {
        case TestKind::JohansenGauss: return johansen_stat(in, Flavor::Gaussian);
        case TestKind::JohansenSemipar: return johansen_stat(in, Flavor::Semiparametric);
        case TestKind::SLGauss: return sl_stat(in, Flavor::Gaussian);
        case TestKind::SLSemipar: return sl_stat(in, Flavor::Semiparametric);
    }
    throw Error("unknown test kind", kStage);
}

}  // namespace coint::stats
