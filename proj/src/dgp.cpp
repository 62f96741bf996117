#include "coint/dgp.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "coint/error.hpp"
#include "coint/rng.hpp"

namespace coint::dgp {

namespace {

void check_finite(const Matrix& m, const char* what, const char* stage) {
    if (!m.allFinite()) throw Error(std::string(what) + " has non-finite entries", stage);
}

// Mean and standard deviation of the Azzalini skew-t with unit scale.
std::pair<double, double> skew_t_moments(double dof, double slant) {
    const double delta = slant / std::sqrt(1.0 + slant * slant);
    const double mean = delta * std::sqrt(dof / std::numbers::pi) *
                        std::exp(std::lgamma((dof - 1.0) / 2.0) - std::lgamma(dof / 2.0));
    const double var = dof / (dof - 2.0) - mean * mean;
    return {mean, std::sqrt(var)};
}

// Fisher information for location of the standardized univariate skew-t.
double skew_t_information(double dof, double slant) {
    const auto [mean, sd] = skew_t_moments(dof, slant);
    boost::math::students_t_distribution<double> base(dof);
    boost::math::students_t_distribution<double> tail(dof + 1.0);
    const double root = std::sqrt(dof + 1.0);
    auto integrand = [&](double x) {
        const double q = dof + x * x;
        const double w = slant * x * root / std::sqrt(q);
        const double cdf = boost::math::cdf(tail, w);
        if (!(cdf > 0.0)) return 0.0;
        const double density = 2.0 * boost::math::pdf(base, x) * cdf;
        const double dlog = -(dof + 1.0) * x / q +
                            boost::math::pdf(tail, w) / cdf * slant * root * dof / (q * std::sqrt(q));
        return dlog * dlog * density;
    };
    const double inf = std::numeric_limits<double>::infinity();
    const double j = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -inf, inf, 15, 1e-12);
    return sd * sd * j;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    out.push_back(field);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
    }
    return out;
}

}  // namespace

InnovationSpec InnovationSpec::gaussian(Matrix sigma) {
    InnovationSpec s;
    s.family = Family::Gaussian;
    s.sigma = std::move(sigma);
    return s;
}

InnovationSpec InnovationSpec::student_t(double dof, Matrix sigma) {
    InnovationSpec s;
    s.family = Family::StudentT;
    s.dof = dof;
    s.sigma = std::move(sigma);
    return s;
}

InnovationSpec InnovationSpec::skewed_t(double dof, Vector slant, Matrix sigma) {
    InnovationSpec s;
    s.family = Family::SkewedT;
    s.dof = dof;
    s.slant = std::move(slant);
    s.sigma = std::move(sigma);
    return s;
}

void InnovationSpec::validate() const {
    const char* stage = "innovations";
    if (sigma.rows() == 0 || sigma.rows() != sigma.cols()) throw Error("sigma must be square and non-empty", stage);
    check_finite(sigma, "sigma", stage);
    if (!linalg::is_symmetric(sigma)) throw Error("covariance not symmetric", stage);
    if (!(linalg::min_eigenvalue(sigma) > 0.0)) throw Error("covariance not positive definite", stage);
    if (family != Family::Gaussian) {
        if (!(dof > 2.0)) throw Error("infinite variance", stage);
    }
    if (family == Family::SkewedT) {
        if (slant.size() != sigma.rows()) throw Error("slant length must equal dimension", stage);
        if (!slant.allFinite()) throw Error("slant has non-finite entries", stage);
    }
}

std::string InnovationSpec::name() const {
    std::ostringstream os;
    switch (family) {
        case Family::Gaussian: os << "gauss"; break;
        case Family::StudentT: os << "t" << dof; break;
        case Family::SkewedT: os << "skewt" << dof; break;
    }
    return os.str();
}

InnovationSpec parse_distribution(const std::string& name, const Matrix& sigma) {
    auto parse_dof = [&](const std::string& rest) {
        try {
            std::size_t used = 0;
            const double v = std::stod(rest, &used);
            if (used != rest.size()) throw Error("bad distribution: " + name, "innovations");
            return v;
        } catch (const std::logic_error&) {
            throw Error("bad distribution: " + name, "innovations");
        }
    };
    InnovationSpec spec;
    if (name == "gauss" || name == "normal" || name == "gaussian") {
        spec = InnovationSpec::gaussian(sigma);
    } else if (name.rfind("skewt", 0) == 0) {
        spec = InnovationSpec::skewed_t(parse_dof(name.substr(5)), Vector::Constant(sigma.rows(), 2.0), sigma);
    } else if (name.rfind("t", 0) == 0) {
        spec = InnovationSpec::student_t(parse_dof(name.substr(1)), sigma);
    } else {
        throw Error("unknown distribution: " + name, "innovations");
    }
    spec.validate();
    return spec;
}

Matrix population_information(const InnovationSpec& spec) {
    spec.validate();
    const Index p = spec.dim();
    switch (spec.family) {
        case Family::Gaussian:
            return linalg::spd_inverse(spec.sigma, "covariance not positive definite");
        case Family::StudentT: {
            const double nu = spec.dof;
            const Matrix scale = spec.sigma * ((nu - 2.0) / nu);
            return (nu + p) / (nu + p + 2.0) * linalg::spd_inverse(scale, "covariance not positive definite");
        }
        case Family::SkewedT: {
            const Matrix L = linalg::cholesky_lower(spec.sigma, "covariance not positive definite");
            Vector j(p);
            for (Index i = 0; i < p; ++i) j(i) = skew_t_information(spec.dof, spec.slant(i));
            const Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));
            Matrix out = Linv.transpose() * j.asDiagonal() * Linv;
            return 0.5 * (out + out.transpose());
        }
    }
    throw Error("unknown family", "innovations");
}

EcmConfig EcmConfig::null_config(Index p, Index T, std::uint64_t seed) {
    EcmConfig c;
    c.p = p;
    c.T = T;
    c.C = Matrix::Zero(p, p);
    c.mu = Vector::Zero(p);
    c.tau = Vector::Zero(p);
    c.seed = seed;
    return c;
}

void EcmConfig::validate() const {
    const char* stage = "ecm";
    if (p < 1) throw Error("dimension must be positive", stage);
    if (T < 10) throw Error("T must be at least 10", stage);
    if (C.rows() != p || C.cols() != p) throw Error("C must be p x p", stage);
    if (mu.size() != p || tau.size() != p) throw Error("mu and tau must have length p", stage);
    check_finite(C, "C", stage);
    if (!mu.allFinite() || !tau.allFinite()) throw Error("mu or tau has non-finite entries", stage);
}

Matrix Panel::differences() const {
    const Index T = length();
    if (T < 2) throw Error("panel too short for differences", "panel");
    return y.rightCols(T - 1) - y.leftCols(T - 1);
}

Matrix sample_innovations(const InnovationSpec& spec, Index T, std::uint64_t seed) {
    spec.validate();
    if (T < 1) throw Error("T must be positive", "innovations");
    const Index p = spec.dim();
    const Matrix L = linalg::cholesky_lower(spec.sigma, "covariance not positive definite");
    Rng rng(seed);
    Matrix z(p, T);
    switch (spec.family) {
        case Family::Gaussian:
            for (Index t = 0; t < T; ++t)
                for (Index i = 0; i < p; ++i) z(i, t) = rng.normal();
            break;
        case Family::StudentT: {
            const double nu = spec.dof;
            for (Index t = 0; t < T; ++t) {
                for (Index i = 0; i < p; ++i) z(i, t) = rng.normal();
                const double v = rng.chi_squared(nu);
                z.col(t) *= std::sqrt((nu - 2.0) / v);
            }
            break;
        }
        case Family::SkewedT: {
            const double nu = spec.dof;
            std::vector<std::pair<double, double>> moments;
            std::vector<double> deltas;
            for (Index i = 0; i < p; ++i) {
                moments.push_back(skew_t_moments(nu, spec.slant(i)));
                deltas.push_back(spec.slant(i) / std::sqrt(1.0 + spec.slant(i) * spec.slant(i)));
            }
            for (Index t = 0; t < T; ++t) {
                for (Index i = 0; i < p; ++i) {
                    const double d = deltas[i];
                    const double u0 = rng.normal();
                    const double u1 = rng.normal();
                    const double v = rng.chi_squared(nu);
                    const double x = (d * std::abs(u0) + std::sqrt(1.0 - d * d) * u1) / std::sqrt(v / nu);
                    z(i, t) = (x - moments[i].first) / moments[i].second;
                }
            }
            break;
        }
    }
    return L * z;
}

Panel simulate_ecm(const EcmConfig& config, const Matrix& eps) {
    config.validate();
    if (eps.rows() != config.p || eps.cols() != config.T)
        throw Error("innovation matrix must be p x T", "ecm");
    check_finite(eps, "innovations", "ecm");
    const Index p = config.p;
    const Index T = config.T;
    const Matrix step = Matrix::Identity(p, p) + config.pi();
    const bool feedback = !config.C.isZero(0.0);
    Panel panel;
    panel.y.resize(p, T);
    Vector x = Vector::Zero(p);
    for (Index t = 0; t < T; ++t) {
        if (feedback) {
            x = step * x + eps.col(t);
        } else {
            x += eps.col(t);
        }
        panel.y.col(t) = config.mu + config.tau * static_cast<double>(t + 1) + x;
    }
    panel.meta = config;
    return panel;
}

Matrix make_local_C(double c, Index p) {
    if (p != 2) throw Error("default direction is defined for p = 2 only", "ecm");
    Matrix d(2, 2);
    d << 1.0, 1.0, 0.0, 0.0;
    return c * d;
}

Matrix make_local_C(double c, const Matrix& direction) {
    if (direction.rows() != direction.cols()) throw Error("direction must be square", "ecm");
    return c * direction;
}

Panel read_panel_csv(std::istream& in) {
    const char* stage = "csv";
    std::string line;
    if (!std::getline(in, line)) throw Error("empty input", stage);
    const auto header = split_fields(line);
    const Index p = static_cast<Index>(header.size());
    for (Index i = 0; i < p; ++i)
        if (header[i] != "y" + std::to_string(i + 1)) throw Error("header must be y1,...,yp", stage);
    std::vector<double> values;
    Index rows = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_fields(line);
        if (static_cast<Index>(fields.size()) != p)
            throw Error("row " + std::to_string(rows + 1) + " has wrong number of fields", stage);
        for (const auto& f : fields) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(f, &used);
            } catch (const std::logic_error&) {
                used = 0;
            }
            if (used == 0 || used != f.size() || !std::isfinite(v))
                throw Error("row " + std::to_string(rows + 1) + ": bad value '" + f + "'", stage);
            values.push_back(v);
        }
        ++rows;
    }
    Panel panel;
    panel.y.resize(p, rows);
    for (Index t = 0; t < rows; ++t)
        for (Index i = 0; i < p; ++i) panel.y(i, t) = values[static_cast<std::size_t>(t * p + i)];
    return panel;
}

Panel read_panel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path, "csv");
    return read_panel_csv(in);
}

void write_panel_csv(const Panel& panel, std::ostream& out) {
    const Index p = panel.dim();
    for (Index i = 0; i < p; ++i) out << (i ? "," : "") << "y" << (i + 1);
    out << "\n";
    out.precision(17);
    for (Index t = 0; t < panel.length(); ++t) {
        for (Index i = 0; i < p; ++i) out << (i ? "," : "") << panel.y(i, t);
        out << "\n";
    }
}

void write_panel_csv(const Panel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path, "csv");
    write_panel_csv(panel, out);
}

Matrix read_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path, "matrix");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        for (char& ch : line)
            if (ch == ',' || ch == ';') ch = ' ';
        std::istringstream is(line);
        std::vector<double> row;
        double v;
        while (is >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(row);
    }
    const Index n = static_cast<Index>(rows.size());
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i) {
        if (static_cast<Index>(rows[i].size()) != n) throw Error("matrix must be square", "matrix");
        for (Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

}  // namespace coint::dgp
