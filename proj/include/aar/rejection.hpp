#pragma once

#include <cstdint>

#include "aar/gmm.hpp"
#include "aar/score_stats.hpp"

namespace aar {

enum class RejectionMethod {
    Aar,           // warm-up hard rejection, then hard + GMM soft rejection
    MzOnly,        // hard rejection at tau_N in every epoch
    FixedQuantile, // hard rejection of the top fixed_gamma fraction
    Iqr,           // hard rejection above Q3 + 1.5 IQR
    None,          // keep everything
};

struct RejectionPolicy {
    RejectionMethod method = RejectionMethod::Aar;
    int warmup_epochs = 15;  // E
    double z = 2.5;
    double soft_weight = 0.1; // t_s
    double fixed_gamma = 0.1; // FixedQuantile only
    GmmConfig gmm_cfg{};
    MzConstants mz{};

    void validate() const;
};

struct WeightVector {
    std::vector<double> weights; // each in {0, t_s, 1}
};

struct WeightAssignment {
    WeightVector weights;
    ThresholdSet thresholds;
    // Post-warm-up mixture fit failed (degenerate batch); weights degraded to
    // hard-only for this batch. Recorded in the run log.
    bool gmm_fallback = false;
};

// One mini-batch weight assignment. Epochs are 1-based; the warm-up condition
// is epoch <= E. Rejection is strict (s > threshold), the soft band is
// half-open (tau < s <= tau_N).
WeightAssignment assign_weights(const ScoreBatch& batch, int epoch, const RejectionPolicy& policy,
                                std::uint64_t seed);

// L = (1/N) * sum_i w_i * s_i, with N the full mini-batch size.
double weighted_loss(const ScoreBatch& batch, const WeightVector& w);

} // namespace aar
