#pragma once

#include <cstdint>
#include <string>

#include "coint/dgp.hpp"
#include "coint/linalg.hpp"

/// Product-logistic kernel estimates of the innovation score and its
/// information matrix.
namespace coint::kde {

struct KdeConfig {
    Vector bandwidths;  ///< a_{i,T}, one per component
    double floor = 0.0; ///< b_T

    void validate(Index p) const;
};

struct ScoreSet {
    Matrix scores;           ///< p x N, column t holds the score at the t-th difference
    KdeConfig config;
    std::int64_t underflows = 0;  ///< points where the density fell below the floor and the score was clamped
    bool degenerate = false;      ///< every score column identical
};

/// Standard logistic density.
double logistic_density(double z);

/// a_i = [4 / (T (p + 2))]^{2/(p+4)} sigma_ii.
Vector silverman_bandwidths(const Matrix& sigma_hat, Index T, Index p);

enum class BandwidthRule {
    Silverman,  ///< [4 / (T (p + 2))]^{1/(p+4)} sd_i
    Logistic,   ///< Silverman divided by the logistic sd pi / sqrt(3)
    Literal,    ///< silverman_bandwidths as written
};

std::string to_string(BandwidthRule rule);
BandwidthRule parse_bandwidth_rule(const std::string& name);
Vector bandwidths(const Matrix& sigma_hat, Index T, Index p, BandwidthRule rule);

double kde_density(const Vector& point, const Matrix& data, const KdeConfig& config);

/// -grad f / (f + b). Sets *underflow (when given) if the clamp was applied.
Vector kde_score(const Vector& point, const Matrix& data, const KdeConfig& config, bool* underflow = nullptr);

/// Scores at every difference of the panel, estimated from the same differences.
ScoreSet score_set(const dgp::Panel& panel, const KdeConfig& config);
ScoreSet score_set_from_differences(const Matrix& diffs, const KdeConfig& config);

/// Rescales the scores so that their centered sample cross moment with the
/// differences is the identity, as it is for the true score.
void normalize_scores(ScoreSet& scores, const Matrix& diffs);

/// Centered sample second moment of the score columns.
Matrix fisher_info_hat(const ScoreSet& scores);

}  // namespace coint::kde
