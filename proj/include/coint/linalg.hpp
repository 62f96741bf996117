#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace coint {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

bool is_symmetric(const Matrix& m, double tol = 1e-12);

/// Ascending eigenvalues of the symmetric part of `m`.
Vector sym_eigenvalues(const Matrix& m);

double min_eigenvalue(const Matrix& m);

/// Lower Cholesky factor; throws coint::Error(message) if `m` is not
/// numerically positive definite.
Matrix cholesky_lower(const Matrix& m, const std::string& message);

/// Inverse of a symmetric positive definite matrix (symmetrized on output).
Matrix spd_inverse(const Matrix& m, const std::string& message);

/// Order statistic at probability `prob` (type-1 empirical quantile):
/// the ceil(prob * n)-th smallest value, clamped to [1, n].
double empirical_quantile(std::span<const double> values, double prob);

std::string format_matrix(const Matrix& m);

}  // namespace linalg
}  // namespace coint
