#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "json.hpp"

#include "coint/dgp.hpp"
#include "coint/linalg.hpp"
#include "coint/rng.hpp"

#ifndef COINT_FIXTURE_DIR
#define COINT_FIXTURE_DIR "tests/fixtures"
#endif

namespace testing_support {

using coint::Index;
using coint::Matrix;
using coint::Vector;

inline std::string fixture(const std::string& name) { return std::string(COINT_FIXTURE_DIR) + "/" + name; }

inline nlohmann::json golden() {
    std::ifstream in(fixture("golden.json"));
    return nlohmann::json::parse(in);
}

inline Matrix rows_to_matrix(const nlohmann::json& j) {
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(j.at(0).size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index k = 0; k < m.cols(); ++k) m(i, k) = j.at(i).at(k).get<double>();
    return m;
}

inline Vector to_vector(const nlohmann::json& j) {
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

inline Matrix random_spd(Index p, coint::Rng& rng, double ridge = 0.3) {
    Matrix a(p, p);
    for (Index i = 0; i < p; ++i)
        for (Index k = 0; k < p; ++k) a(i, k) = rng.normal();
    return a * a.transpose() / static_cast<double>(p) + ridge * Matrix::Identity(p, p);
}

inline Matrix random_matrix(Index r, Index c, coint::Rng& rng) {
    Matrix a(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index k = 0; k < c; ++k) a(i, k) = rng.normal();
    return a;
}

/// Values on the grid 2^-10 with small magnitude, so that sums and
/// differences of a few thousand of them are exact in double precision.
inline Matrix dyadic(const Matrix& m) { return (m * 1024.0).array().round().matrix() / 1024.0; }

inline coint::dgp::Panel dyadic_panel(Index p, Index T, std::uint64_t seed, double c = 0.0) {
    auto cfg = coint::dgp::EcmConfig::null_config(p, T, seed);
    if (p == 2) cfg.C = coint::dgp::make_local_C(c, 2);
    const Matrix eps = dyadic(coint::dgp::sample_innovations(
        coint::dgp::InnovationSpec::student_t(5.0, Matrix::Identity(p, p)), T, seed));
    coint::dgp::Panel panel = coint::dgp::simulate_ecm(cfg, eps);
    panel.y = dyadic(panel.y);
    return panel;
}

/// Bit-level equality of two matrices.
inline bool identical(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Index i = 0; i < a.size(); ++i)
        if (std::memcmp(a.data() + i, b.data() + i, sizeof(double)) != 0) return false;
    return true;
}

}  // namespace testing_support
