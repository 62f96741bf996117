#pragma once

#include <optional>
#include <string>

#include "coint/empirical.hpp"
#include "coint/linalg.hpp"

namespace coint::stats {

enum class TrendCase { InterceptOnly, LinearTrend };
enum class TestKind { JohansenGauss, JohansenSemipar, SLGauss, SLSemipar };
enum class Flavor { Semiparametric, Gaussian };

std::string to_string(TrendCase t);
std::string to_string(TestKind k);
TrendCase parse_trend(const std::string& s);
TestKind parse_test_kind(const std::string& s);
TrendCase trend_of(TestKind k);
Flavor flavor_of(TestKind k);

/// Processes and matrices every likelihood functional consumes.
struct LrInputs {
    emp::StepProcess w;   ///< W_eps role
    emp::StepProcess h;   ///< integrator (bridged score process) role
    Matrix sigma;
    Matrix j;
    /// Bridge of w, when a drift-exact version is available; otherwise
    /// bridge(w) is used.
    std::optional<emp::StepProcess> w_bridge;

    void validate() const;
    emp::StepProcess bridged_w() const;
};

LrInputs from_plugins(const emp::PluginSet& plugins);

/// Left-point sum sum_k X_k (H_{k+1} - H_k)'.
Matrix ito_sum(const emp::StepProcess& integrand, const emp::StepProcess& integrator);

/// Quadratic log-likelihood in vec(C): vec(C)'s - vec(C)'M vec(C) / 2.
struct QuadraticForm {
    Vector s;
    Matrix M;

    double value(const Matrix& C) const;
    /// 2 max_C value(C) = s'M^{-1}s; throws "degenerate information" unless M is PD.
    double maximum() const;
    Matrix argmax() const;
};

/// Linear and quadratic terms of the likelihood over C for integrand W and
/// integrator G with weight J in the path term and sigma^{-1} - J in the mean term.
QuadraticForm quadratic_form(const emp::StepProcess& w, const emp::StepProcess& g, const Matrix& j,
                             const Matrix& sigma_inv);

/// Log-likelihood ratio of the maximal invariant at (C, delta).
double l_M(const Matrix& C, const Vector& delta, const LrInputs& in);

double l_mu_star(const Matrix& C_bar, const LrInputs& in);

/// Maximizer of l_M(C_star, .) over the drift.
Vector profile_delta(const Matrix& C_star, const LrInputs& in);

/// Profile likelihood ratio l_M(C_bar, d) - l_M(0, d0), d = profile_delta(C_star).
double l_tau_star(const Matrix& C_bar, const Matrix& C_star, const LrInputs& in);

/// Sufficient statistics of l_M over (C, delta) for one set of inputs, so the
/// likelihood can be evaluated at many alternatives without revisiting paths.
struct LikelihoodSummary {
    Matrix S0;        ///< sum dG W'
    Matrix A0;        ///< sum W W' du
    Vector w_mean;    ///< sum W du
    Vector w_umean;   ///< sum u W du
    Vector g_u;       ///< sum u dG
    Vector g_end;     ///< G(1)
    double u_mean = 0.5;
    double u2_mean = 1.0 / 3.0;
    Matrix sigma_inv;
    Matrix j;

    double l_M(const Matrix& C, const Vector& delta) const;
    double l_mu_star(const Matrix& C) const;
    Vector profile_delta(const Matrix& C) const;
    double l_tau_star(const Matrix& C_bar, const Matrix& C_star) const;
};

LikelihoodSummary summarize(const LrInputs& in);

QuadraticForm johansen_form(const LrInputs& in, Flavor flavor);
QuadraticForm sl_form(const LrInputs& in, Flavor flavor);

double johansen_stat(const LrInputs& in, Flavor flavor);
double sl_stat(const LrInputs& in, Flavor flavor);
double statistic(TestKind kind, const LrInputs& in);

/// W + u c' for a vector c, used to express drifts on the process clock.
emp::StepProcess add_drift(const emp::StepProcess& w, const Vector& slope);

Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace coint::stats
