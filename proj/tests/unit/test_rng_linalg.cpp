#include <gtest/gtest.h>

#include <set>

#include "coint/error.hpp"
#include "coint/linalg.hpp"
#include "coint/rng.hpp"

using namespace coint;

TEST(DeriveSeed, DistinctAcrossIndicesAndStreams) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 3; ++s)
        for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i, s));
    EXPECT_EQ(seen.size(), 3000u);
    EXPECT_EQ(derive_seed(42, 7), derive_seed(42, 7, 0));
    EXPECT_NE(derive_seed(42, 7), derive_seed(43, 7));
}

TEST(Rng, ReproducibleStreams) {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
    EXPECT_EQ(a.chi_squared(3.0), b.chi_squared(3.0));
}

TEST(EmpiricalQuantile, TypeOneOrderStatistic) {
    const std::vector<double> v{5, 1, 4, 2, 3};
    EXPECT_EQ(linalg::empirical_quantile(v, 0.0), 1.0);
    EXPECT_EQ(linalg::empirical_quantile(v, 0.2), 1.0);
    EXPECT_EQ(linalg::empirical_quantile(v, 0.21), 2.0);
    EXPECT_EQ(linalg::empirical_quantile(v, 0.95), 5.0);
    EXPECT_EQ(linalg::empirical_quantile(v, 1.0), 5.0);
    EXPECT_THROW(linalg::empirical_quantile(std::vector<double>{}, 0.5), Error);
}

TEST(EmpiricalQuantile, MonotoneInProbability) {
    Rng rng(1);
    std::vector<double> v(1001);
    for (auto& x : v) x = rng.normal();
    double last = -1e300;
    for (double q = 0.0; q <= 1.0; q += 0.01) {
        const double now = linalg::empirical_quantile(v, q);
        EXPECT_GE(now, last);
        last = now;
    }
}

TEST(Linalg, SpdHelpers) {
    Matrix m(2, 2);
    m << 4.0, 1.0, 1.0, 3.0;
    EXPECT_LE((linalg::spd_inverse(m, "x") * m - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
    const Matrix L = linalg::cholesky_lower(m, "x");
    EXPECT_LE((L * L.transpose() - m).cwiseAbs().maxCoeff(), 1e-14);
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(linalg::cholesky_lower(bad, "x"), Error);
    EXPECT_TRUE(linalg::is_symmetric(m));
    EXPECT_NEAR(linalg::min_eigenvalue(bad), -1.0, 1e-14);
}
