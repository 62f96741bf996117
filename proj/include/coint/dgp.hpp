#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "coint/linalg.hpp"

/// Error-correction panels under local-to-unity alternatives.
namespace coint::dgp {

enum class Family { Gaussian, StudentT, SkewedT };

/// Innovation law. Every family is rescaled so that E[eps] = 0 and
/// Var[eps] = sigma exactly.
struct InnovationSpec {
    Family family = Family::Gaussian;
    double dof = 0.0;  ///< StudentT / SkewedT only; must exceed 2.
    Vector slant;      ///< SkewedT only; one Azzalini slant per component.
    Matrix sigma;

    static InnovationSpec gaussian(Matrix sigma);
    static InnovationSpec student_t(double dof, Matrix sigma);
    static InnovationSpec skewed_t(double dof, Vector slant, Matrix sigma);

    Index dim() const { return sigma.rows(); }
    void validate() const;
    std::string name() const;
};

/// Parses "gauss" / "normal", "t<dof>" and "skewt<dof>" (default slant 2 in
/// every component).
InnovationSpec parse_distribution(const std::string& name, const Matrix& sigma);

/// Population Fisher information of the location score, E[l l'].
/// Closed form for Gaussian and Student t; one-dimensional quadrature per
/// component for the skewed t.
Matrix population_information(const InnovationSpec& spec);

struct EcmConfig {
    Index p = 2;
    Index T = 250;
    Matrix C;   ///< local parameter; Pi = C / T
    Vector mu;  ///< level
    Vector tau; ///< trend slope on the raw time scale
    std::uint64_t seed = 0;

    /// Zero C, mu and tau of the right shapes.
    static EcmConfig null_config(Index p, Index T, std::uint64_t seed = 0);

    void validate() const;
    Matrix pi() const { return C / static_cast<double>(T); }
    Vector delta() const { return tau * std::sqrt(static_cast<double>(T)); }
};

struct Panel {
    Matrix y;                       ///< p x T, column t-1 holds y_t
    std::optional<EcmConfig> meta;  ///< empty for external data

    Index dim() const { return y.rows(); }
    Index length() const { return y.cols(); }
    /// p x (T-1); column t-2 holds y_t - y_{t-1}, t = 2..T.
    Matrix differences() const;
};

/// p x T matrix of i.i.d. draws.
Matrix sample_innovations(const InnovationSpec& spec, Index T, std::uint64_t seed);

/// x_0 = 0, x_t = (I + C/T) x_{t-1} + eps_t, y_t = mu + tau t + x_t.
Panel simulate_ecm(const EcmConfig& config, const Matrix& eps);

/// c * [[1, 1], [0, 0]] for p = 2.
Matrix make_local_C(double c, Index p = 2);
/// c * direction, for other designs.
Matrix make_local_C(double c, const Matrix& direction);

Panel read_panel_csv(std::istream& in);
Panel read_panel_csv(const std::string& path);
void write_panel_csv(const Panel& panel, std::ostream& out);
void write_panel_csv(const Panel& panel, const std::string& path);

/// Whitespace- or comma-separated square matrix, one row per line.
Matrix read_matrix(const std::string& path);

}  // namespace coint::dgp
