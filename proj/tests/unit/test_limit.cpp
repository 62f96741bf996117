#include <gtest/gtest.h>

#include "coint/dgp.hpp"
#include "coint/error.hpp"
#include "coint/limit.hpp"
#include "coint/parallel.hpp"
#include "coint/rng.hpp"
#include "support.hpp"

using namespace coint;
using namespace coint::limit;
using stats::TestKind;
using stats::TrendCase;

namespace {

LimitSpec spec_for(const Matrix& sigma, const Matrix& j, Index grid, Index reps, std::uint64_t seed = 77) {
    LimitSpec s;
    s.sigma = sigma;
    s.j = j;
    s.grid_n = grid;
    s.reps = reps;
    s.seed = seed;
    return s;
}

Matrix t3_information(const Matrix& sigma) {
    return dgp::population_information(dgp::InnovationSpec::student_t(3.0, sigma));
}

Matrix example_sigma() {
    Matrix s(2, 2);
    s << 1.0, 0.5, 0.5, 2.0;
    return s;
}

}  // namespace

TEST(Coordinates, EigenvaluesOfNormalizedInformation) {
    const Matrix sigma = example_sigma();
    const Coordinates co = coordinates(sigma, t3_information(sigma));
    EXPECT_NEAR(co.k(0), 15.0 / 7.0, 1e-10);
    EXPECT_NEAR(co.k(1), 15.0 / 7.0, 1e-10);
    EXPECT_FALSE(co.clipped);
    const Coordinates g = coordinates(sigma, sigma.inverse());
    EXPECT_EQ(g.k, Vector::Ones(2));
}

TEST(Coordinates, IncoherentPairRejected) {
    const Matrix sigma = example_sigma();
    try {
        coordinates(sigma, 0.5 * sigma.inverse());
        FAIL() << "expected error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("incoherent"), std::string::npos);
    }
    EXPECT_THROW(draw_null_paths(spec_for(sigma, 0.5 * sigma.inverse(), 100, 1), 1), Error);
}

TEST(ProjectInformation, ClipsBelowInverseCovariance) {
    const Matrix sigma = example_sigma();
    bool changed = true;
    const Matrix j = t3_information(sigma);
    EXPECT_EQ(project_information(sigma, j, &changed), j);
    EXPECT_FALSE(changed);
    Matrix low = sigma.inverse();
    low(0, 0) *= 0.9;
    const Matrix fixed = project_information(sigma, low, &changed);
    EXPECT_TRUE(changed);
    EXPECT_GE(linalg::min_eigenvalue(fixed - sigma.inverse()), -1e-12);
    EXPECT_NO_THROW(coordinates(sigma, fixed));
}

TEST(DrawNullPaths, GaussianInformationGivesLinearScore) {
    const Matrix sigma = example_sigma();
    const LimitDraw d = draw_null_paths(spec_for(sigma, sigma.inverse(), 500, 1), 5);
    EXPECT_LE((d.w_lf.values - sigma.inverse() * d.w_eps.values).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(d.w_eps.values.col(0).isZero(0.0));
    EXPECT_TRUE(d.w_lf.values.col(0).isZero(0.0));
}

TEST(DrawNullPaths, EndpointCovarianceMatchesBlocks) {
    const Matrix sigma = example_sigma();
    const Matrix j = t3_information(sigma);
    const LimitSpec spec = spec_for(sigma, j, 100, 100000);
    const auto R = static_cast<std::size_t>(spec.reps);
    Matrix ends(4, spec.reps);
    parallel_for(R, 0, [&](std::size_t r) {
        const LimitDraw d = draw_null_paths(spec, derive_seed(spec.seed, r));
        ends.col(static_cast<Index>(r)) << d.w_eps.at_end(), d.w_lf.at_end();
    });
    Matrix block(4, 4);
    block << sigma, Matrix::Identity(2, 2), Matrix::Identity(2, 2), j;
    const double n = static_cast<double>(spec.reps);
    const Matrix cov = ends * ends.transpose() / n;
    for (Index a = 0; a < 4; ++a)
        for (Index b = 0; b < 4; ++b) {
            const double se = std::sqrt((block(a, a) * block(b, b) + block(a, b) * block(a, b)) / n);
            EXPECT_LE(std::abs(cov(a, b) - block(a, b)), 3.0 * se) << a << "," << b;
        }
}

TEST(DrawNullPaths, ReproducibleAndEqualToZeroOu) {
    const Matrix sigma = example_sigma();
    const LimitSpec spec = spec_for(sigma, t3_information(sigma), 300, 1);
    const LimitDraw a = draw_null_paths(spec, 11);
    const LimitDraw b = draw_null_paths(spec, 11);
    const LimitDraw c = simulate_ou(spec, Matrix::Zero(2, 2), Vector::Zero(2), 11);
    EXPECT_TRUE(testing_support::identical(a.w_eps.values, b.w_eps.values));
    EXPECT_TRUE(testing_support::identical(a.w_lf.values, c.w_lf.values));
    EXPECT_TRUE(testing_support::identical(a.w_eps.values, c.w_eps.values));
    EXPECT_FALSE(testing_support::identical(a.w_eps.values, draw_null_paths(spec, 12).w_eps.values));
}

TEST(SimulateOu, ConstantDriftShiftsEndpointMean) {
    const Matrix sigma = Matrix::Identity(2, 2);
    const LimitSpec spec = spec_for(sigma, sigma, 200, 20000);
    Vector delta(2);
    delta << 1.5, -0.75;
    Vector mean = Vector::Zero(2);
    for (Index r = 0; r < spec.reps; ++r)
        mean += simulate_ou(spec, Matrix::Zero(2, 2), delta, derive_seed(1, static_cast<std::uint64_t>(r))).w_eps.at_end();
    mean /= static_cast<double>(spec.reps);
    const double se = 1.0 / std::sqrt(static_cast<double>(spec.reps));
    EXPECT_LE((mean - delta).cwiseAbs().maxCoeff(), 3.0 * se);
}

TEST(SimulateOu, OrnsteinUhlenbeckVariance) {
    const double c = -5.0;
    const LimitSpec spec = spec_for(Matrix::Identity(1, 1), Matrix::Identity(1, 1), 1000, 20000);
    std::vector<double> ends(static_cast<std::size_t>(spec.reps));
    parallel_for(ends.size(), 0, [&](std::size_t r) {
        ends[r] = simulate_ou(spec, Matrix::Constant(1, 1, c), Vector::Zero(1), derive_seed(2, r)).w_eps.at_end()(0);
    });
    double m2 = 0.0, m4 = 0.0;
    for (double e : ends) {
        m2 += e * e;
        m4 += e * e * e * e;
    }
    const double n = static_cast<double>(ends.size());
    m2 /= n;
    m4 /= n;
    const double closed = (1.0 - std::exp(2.0 * c)) / (-2.0 * c);
    EXPECT_LE(std::abs(m2 - closed), 3.0 * std::sqrt((m4 - m2 * m2) / n));
}

TEST(NullBankTest, MatchesDirectPathStatistics) {
    const Matrix sigma = example_sigma();
    const Matrix j = t3_information(sigma);
    const LimitSpec spec = spec_for(sigma, j, 200, 8, 31);
    const Vector k = coordinates(sigma, j).k;
    for (TrendCase trend : {TrendCase::InterceptOnly, TrendCase::LinearTrend}) {
        const NullBank bank(2, trend, spec.grid_n, spec.reps, spec.seed, 1);
        const TestKind semi = trend == TrendCase::InterceptOnly ? TestKind::JohansenSemipar : TestKind::SLSemipar;
        const TestKind gauss = trend == TrendCase::InterceptOnly ? TestKind::JohansenGauss : TestKind::SLGauss;
        for (Index r = 0; r < spec.reps; ++r) {
            const LimitDraw d = draw_null_paths(spec, derive_seed(spec.seed, static_cast<std::uint64_t>(r)));
            const double direct = stats::statistic(semi, d.inputs(sigma, j));
            EXPECT_NEAR(bank.statistic(r, k), direct, 1e-8 * std::max(1.0, direct));
            const double dg = stats::statistic(gauss, d.inputs(sigma, j));
            EXPECT_NEAR(bank.statistic(r, Vector::Ones(2)), dg, 1e-8 * std::max(1.0, dg));
        }
    }
}

TEST(NullBankTest, IndependentOfWorkerCount) {
    const NullBank a(2, TrendCase::LinearTrend, 100, 64, 5, 1);
    const NullBank b(2, TrendCase::LinearTrend, 100, 64, 5, 3);
    const Vector k = (Vector(2) << 1.0, 2.5).finished();
    EXPECT_EQ(a.statistics(k), b.statistics(k));
}

TEST(CriticalValue, MonotoneInAlpha) {
    const LimitSpec spec = spec_for(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 200, 2000, 3);
    double last = 1e300;
    for (double alpha : {0.01, 0.05, 0.1, 0.5, 0.9, 0.9999}) {
        const double cv = critical_value(TestKind::JohansenGauss, spec, alpha);
        EXPECT_LE(cv, last);
        last = cv;
    }
    const NullBank bank(2, TrendCase::InterceptOnly, 200, 2000, 3, 1);
    const auto v = bank.statistics(Vector::Ones(2));
    EXPECT_EQ(last, *std::min_element(v.begin(), v.end()));
}

TEST(CriticalValue, SemiparametricEqualsGaussianAtGaussianInformation) {
    const Matrix sigma = example_sigma();
    const LimitSpec spec = spec_for(sigma, sigma.inverse(), 200, 2000, 4);
    EXPECT_DOUBLE_EQ(critical_value(TestKind::JohansenSemipar, spec, 0.05),
                     critical_value(TestKind::JohansenGauss, spec, 0.05));
    EXPECT_DOUBLE_EQ(critical_value(TestKind::SLSemipar, spec, 0.05), critical_value(TestKind::SLGauss, spec, 0.05));
}

TEST(CriticalValue, BankAgreesWithDirectSimulation) {
    const Matrix sigma = example_sigma();
    const LimitSpec spec = spec_for(sigma, t3_information(sigma), 200, 1000, 6);
    for (TestKind kind : {TestKind::JohansenSemipar, TestKind::SLSemipar})
        EXPECT_NEAR(critical_value(kind, spec, 0.05), critical_value_direct(kind, spec, 0.05), 1e-8);
}

TEST(CriticalValue, SelfConsistentAcrossIndependentRuns) {
    const LimitSpec a = spec_for(Matrix::Identity(1, 1), Matrix::Identity(1, 1), 1000, 100000, 100);
    LimitSpec b = a;
    b.seed = 200;
    const double ca = critical_value(TestKind::JohansenGauss, a, 0.05);
    const double cb = critical_value(TestKind::JohansenGauss, b, 0.05);
    EXPECT_LE(std::abs(ca - cb) / ca, 0.02);
    // Tabulated 5% trace critical values without deterministic terms.
    EXPECT_LE(std::abs(ca - 4.13) / 4.13, 0.03);
}

TEST(CriticalValue, TwoDimensionalLiteratureValue) {
    const LimitSpec spec = spec_for(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1000, 20000, 300);
    EXPECT_LE(std::abs(critical_value(TestKind::JohansenGauss, spec, 0.05) - 12.32) / 12.32, 0.03);
}

TEST(PowerEnvelope, NullLevelAndDominance) {
    const Matrix sigma = Matrix::Identity(2, 2);
    for (const Matrix& j : {Matrix(Matrix::Identity(2, 2)), t3_information(sigma)}) {
        const LimitSpec spec = spec_for(sigma, j, 200, 1500, 8);
        const std::vector<TestKind> kinds{TestKind::JohansenGauss, TestKind::JohansenSemipar};
        const EnvelopeResult env =
            power_envelope(spec, TrendCase::InterceptOnly, {0.0, -5.0, -10.0}, 0.05, kinds, dgp::make_local_C(1.0, 2), 1);
        ASSERT_EQ(env.rows.size(), 3u);
        EXPECT_EQ(env.rows[0].envelope, 0.05);
        for (const auto& row : env.rows) {
            for (std::size_t k = 0; k < kinds.size(); ++k) {
                const double se = std::hypot(row.envelope_se, row.test_se[k]);
                EXPECT_GE(row.envelope + 2.0 * se, row.test_power[k]) << row.c;
            }
        }
        EXPECT_GT(env.rows[2].envelope, env.rows[1].envelope);
        EXPECT_NEAR(env.rows[0].test_power[0], 0.05, 3.0 * std::sqrt(0.05 * 0.95 / 1500.0));
    }
}

TEST(PowerEnvelope, GaussianPointOptimalMatchesDirectSimulation) {
    // Sigma = J = I, C = c [[1, 1], [0, 0]]: the log likelihood ratio is
    // c int s dW_1 - c^2/2 int s^2 du with s = W_1 + W_2, simulated here by Euler.
    const Index n = 500;
    const std::size_t R = 4000;
    const double c = -5.0;
    const double du = 1.0 / static_cast<double>(n);
    coint::Rng rng(31);
    auto draw = [&](double drift) {
        double w1 = 0.0, w2 = 0.0, d = 0.0, q = 0.0;
        for (Index k = 0; k < n; ++k) {
            const double s = w1 + w2;
            const double dw1 = drift * s * du + rng.normal() * std::sqrt(du);
            const double dw2 = rng.normal() * std::sqrt(du);
            d += s * dw1;
            q += s * s * du;
            w1 += dw1;
            w2 += dw2;
        }
        return c * d - 0.5 * c * c * q;
    };
    std::vector<double> null(R);
    for (auto& v : null) v = draw(0.0);
    const double kappa = linalg::empirical_quantile(null, 0.95);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < R; ++r) hits += draw(c) > kappa ? 1 : 0;
    const double oracle = static_cast<double>(hits) / static_cast<double>(R);

    const LimitSpec spec = spec_for(Matrix::Identity(2, 2), Matrix::Identity(2, 2), n, 4000, 32);
    const EnvelopeResult env = power_envelope(spec, TrendCase::InterceptOnly, {c}, 0.05, {TestKind::JohansenGauss},
                                              dgp::make_local_C(1.0, 2), 1);
    const double se = std::hypot(env.rows[0].envelope_se, std::sqrt(2.0 * oracle * (1.0 - oracle) / R));
    EXPECT_NEAR(env.rows[0].envelope, oracle, 3.0 * se);
}

TEST(PowerEnvelope, NullPowerSeIncludesQuantileError) {
    const LimitSpec spec = spec_for(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 100, 2000, 33);
    const EnvelopeResult env = power_envelope(spec, TrendCase::InterceptOnly, {0.0}, 0.05, {TestKind::JohansenGauss},
                                              dgp::make_local_C(1.0, 2), 1);
    // at c = 0 the slope is about one, so the variance roughly doubles
    const double rate = env.rows[0].test_power[0];
    const double plain = std::sqrt(rate * (1.0 - rate) / 2000.0);
    EXPECT_GT(env.rows[0].test_se[0], 1.2 * plain);
    EXPECT_LT(env.rows[0].test_se[0], 1.8 * plain);
}

TEST(PowerEnvelope, LinearTrendDominance) {
    const Matrix sigma = Matrix::Identity(2, 2);
    const LimitSpec spec = spec_for(sigma, t3_information(sigma), 200, 1500, 9);
    const std::vector<TestKind> kinds{TestKind::SLGauss, TestKind::SLSemipar};
    const EnvelopeResult env =
        power_envelope(spec, TrendCase::LinearTrend, {-10.0}, 0.05, kinds, dgp::make_local_C(1.0, 2), 1);
    for (std::size_t k = 0; k < kinds.size(); ++k)
        EXPECT_GE(env.rows[0].envelope + 2.0 * std::hypot(env.rows[0].envelope_se, env.rows[0].test_se[k]),
                  env.rows[0].test_power[k]);
}

TEST(Labf, ZeroAlternativeAndConvergence) {
    const LimitSpec spec = spec_for(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1600, 2000, 10);
    const LabfReport zero = labf_diagnostic({100, 400}, spec, Matrix::Zero(2, 2), 1);
    for (const auto& row : zero.rows) {
        EXPECT_EQ(row.mean_finite, 0.0);
        EXPECT_EQ(row.var_finite, 0.0);
        EXPECT_EQ(row.distance, 0.0);
    }
    EXPECT_DOUBLE_EQ(zero.exp_mean, 1.0);
    const LabfReport rep = labf_diagnostic({100, 400, 1600}, spec, dgp::make_local_C(-0.5, 2), 1);
    EXPECT_GT(rep.rows[0].rms_gap, rep.rows[1].rms_gap);
    EXPECT_GT(rep.rows[1].rms_gap, rep.rows[2].rms_gap);
    // the feasible sums start at y_1, so the gap shrinks like T^{-1/2}
    EXPECT_LE(rep.rows[2].rms_gap, 0.05);
    EXPECT_LE(std::abs(rep.exp_mean - 1.0), 3.0 * rep.exp_se);
    EXPECT_THROW(labf_diagnostic({300}, spec, Matrix::Zero(2, 2), 1), Error);
}
