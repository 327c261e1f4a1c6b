#pragma once

#include <optional>
#include <span>
#include <vector>

#include "aar/errors.hpp"

namespace aar {

// Per-sample anomaly scores for one mini-batch. Labels ride along for
// evaluation only; training code never reads them.
struct ScoreBatch {
    std::vector<double> scores;
    std::optional<std::vector<int>> labels; // 0 normal, 1 anomaly

    // Throws InvalidInput unless scores are nonempty, finite and >= 0, and
    // labels (when present) align and take values in {0, 1}.
    void validate() const;
};

struct RobustSummary {
    double median = 0.0;
    double mad = 0.0;
};

// Constants of the modified z-score detector. Fixed by convention; exposed so
// configs can override them, which nothing in this project does by default.
struct MzConstants {
    double consistency = 0.6745; // scales MAD to a std-dev-like unit
    double cutoff = 3.5;         // |m_i| above this flags an outlier
};

RobustSummary median_mad(const ScoreBatch& batch);

// m_i = consistency * (s_i - median) / MAD. Throws DegenerateSpread when
// MAD == 0; the caller decides the fallback.
std::vector<double> modified_z_scores(const ScoreBatch& batch, const MzConstants& mz = {});

// tau_N = cutoff * MAD / consistency + median. A zero-MAD batch carries no
// outlier evidence, so the threshold degenerates to +infinity.
double normality_threshold(const ScoreBatch& batch, const MzConstants& mz = {});

// Q3 + 1.5 * (Q3 - Q1), quartiles by type-7 interpolation. Needs >= 2 samples.
double iqr_threshold(const ScoreBatch& batch);

// Empirical q-quantile, type-7 (linear interpolation between order
// statistics). Callers reject samples with score > threshold.
double quantile_threshold(const ScoreBatch& batch, double q);

// Type-7 quantile of an already sorted, nonempty range.
double quantile_sorted(std::span<const double> sorted, double q);

} // namespace aar
