#include "aar/score_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aar {

void ScoreBatch::validate() const {
    if (scores.empty()) throw InvalidInput("score batch is empty");
    for (double s : scores) {
        if (!std::isfinite(s)) throw InvalidInput("score batch contains a non-finite value");
        if (s < 0.0) throw InvalidInput("score batch contains a negative value");
    }
    if (labels) {
        if (labels->size() != scores.size())
            throw InvalidInput("label vector length does not match scores");
        for (int y : *labels)
            if (y != 0 && y != 1) throw InvalidInput("labels must be 0 or 1");
    }
}

namespace {

double median_of_sorted(std::span<const double> v) {
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw InvalidInput("quantile of empty range");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("quantile q must lie in [0, 1]");
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double h = static_cast<double>(n - 1) * q;
    auto lo = static_cast<std::size_t>(h);
    if (lo >= n - 1) return sorted[n - 1];
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

RobustSummary median_mad(const ScoreBatch& batch) {
    batch.validate();
    std::vector<double> v = batch.scores;
    std::sort(v.begin(), v.end());
    RobustSummary out;
    out.median = median_of_sorted(v);
    for (double& x : v) x = std::fabs(x - out.median);
    std::sort(v.begin(), v.end());
    out.mad = median_of_sorted(v);
    return out;
}

std::vector<double> modified_z_scores(const ScoreBatch& batch, const MzConstants& mz) {
    RobustSummary rs = median_mad(batch);
    if (rs.mad == 0.0) throw DegenerateSpread("MAD is zero; modified z-scores undefined");
    std::vector<double> m(batch.scores.size());
    const double scale = mz.consistency / rs.mad;
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = scale * (batch.scores[i] - rs.median);
    return m;
}

double normality_threshold(const ScoreBatch& batch, const MzConstants& mz) {
    RobustSummary rs = median_mad(batch);
    if (rs.mad == 0.0) return std::numeric_limits<double>::infinity();
    return mz.cutoff * rs.mad / mz.consistency + rs.median;
}

double iqr_threshold(const ScoreBatch& batch) {
    batch.validate();
    if (batch.scores.size() < 2) throw InvalidInput("IQR threshold needs at least 2 samples");
    std::vector<double> v = batch.scores;
    std::sort(v.begin(), v.end());
    double q1 = quantile_sorted(v, 0.25);
    double q3 = quantile_sorted(v, 0.75);
    return q3 + 1.5 * (q3 - q1);
}

double quantile_threshold(const ScoreBatch& batch, double q) {
    batch.validate();
    std::vector<double> v = batch.scores;
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, q);
}

} // namespace aar
