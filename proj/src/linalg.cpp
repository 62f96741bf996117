#include "coint/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coint/error.hpp"

namespace coint::linalg {

bool is_symmetric(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Vector sym_eigenvalues(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double min_eigenvalue(const Matrix& m) { return sym_eigenvalues(m).minCoeff(); }

Matrix cholesky_lower(const Matrix& m, const std::string& message) {
    if (m.rows() != m.cols() || m.rows() == 0) throw Error(message);
    Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
    if (llt.info() != Eigen::Success) throw Error(message);
    Matrix l = llt.matrixL();
    if (l.diagonal().minCoeff() <= 0.0 || !l.allFinite()) throw Error(message);
    return l;
}

Matrix spd_inverse(const Matrix& m, const std::string& message) {
    Matrix l = cholesky_lower(m, message);
    Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(m.rows(), m.cols()));
    Matrix inv = linv.transpose() * linv;
    return 0.5 * (inv + inv.transpose());
}

double empirical_quantile(std::span<const double> values, double prob) {
    if (values.empty()) throw Error("quantile of an empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(prob * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(rank - 1), sorted.end());
    return sorted[rank - 1];
}

std::string format_matrix(const Matrix& m) {
    std::ostringstream os;
    os << "[";
    for (Index i = 0; i < m.rows(); ++i) {
        os << (i ? "; " : "");
        for (Index j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
    }
    os << "]";
    return os.str();
}

}  // namespace coint::linalg
