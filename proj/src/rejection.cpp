#include "aar/rejection.hpp"

#include <cmath>
#include <limits>

namespace aar {

void RejectionPolicy::validate() const {
    if (warmup_epochs < 0) throw InvalidInput("warmup_epochs must be >= 0");
    if (!(z > 0.0)) throw InvalidInput("z must be > 0");
    if (!(soft_weight >= 0.0 && soft_weight <= 1.0)) throw InvalidInput("soft_weight must lie in [0, 1]");
    if (method == RejectionMethod::FixedQuantile && !(fixed_gamma >= 0.0 && fixed_gamma <= 1.0))
        throw InvalidInput("fixed_gamma must lie in [0, 1]");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

WeightVector hard_weights(const std::vector<double>& scores, double threshold) {
    WeightVector w;
    w.weights.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        w.weights[i] = scores[i] > threshold ? 0.0 : 1.0;
    return w;
}

} // namespace

WeightAssignment assign_weights(const ScoreBatch& batch, int epoch, const RejectionPolicy& policy,
                                std::uint64_t seed) {
    batch.validate();
    policy.validate();
    if (epoch < 1) throw InvalidInput("epoch is 1-based");

    const std::vector<double>& s = batch.scores;
    WeightAssignment out;

    switch (policy.method) {
    case RejectionMethod::None:
        out.thresholds.tau_n = kInf;
        out.weights = hard_weights(s, kInf);
        return out;
    case RejectionMethod::FixedQuantile:
        out.thresholds.tau_n = quantile_threshold(batch, 1.0 - policy.fixed_gamma);
        out.weights = hard_weights(s, out.thresholds.tau_n);
        return out;
    case RejectionMethod::Iqr:
        out.thresholds.tau_n = s.size() >= 2 ? iqr_threshold(batch) : kInf;
        out.weights = hard_weights(s, out.thresholds.tau_n);
        return out;
    case RejectionMethod::MzOnly:
        out.thresholds.tau_n = normality_threshold(batch, policy.mz);
        out.weights = hard_weights(s, out.thresholds.tau_n);
        return out;
    case RejectionMethod::Aar:
        break;
    }

    const double tau_n = normality_threshold(batch, policy.mz);
    out.thresholds.tau_n = tau_n;

    if (epoch <= policy.warmup_epochs) {
        out.weights = hard_weights(s, tau_n);
        return out;
    }

    GmmFit fit;
    try {
        if (s.size() < 4) throw DegenerateInput("batch too small for mixture fit");
        fit = fit_gmm2(batch, policy.gmm_cfg, seed);
    } catch (const DegenerateInput&) {
        out.weights = hard_weights(s, tau_n);
        out.gmm_fallback = true;
        return out;
    }

    const double tau_sigma = z_sigma_threshold(fit, policy.z);
    const auto tau_i = intersection_threshold(fit);
    const double tau = tau_i ? std::max(tau_sigma, *tau_i) : tau_sigma;
    out.thresholds.tau_i = tau_i;
    out.thresholds.tau_sigma = tau_sigma;
    out.thresholds.tau = tau;

    out.weights.weights.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] > tau_n)
            out.weights.weights[i] = 0.0;
        else if (s[i] > tau)
            out.weights.weights[i] = policy.soft_weight;
        else
            out.weights.weights[i] = 1.0;
    }
    return out;
}

double weighted_loss(const ScoreBatch& batch, const WeightVector& w) {
    batch.validate();
    if (w.weights.size() != batch.scores.size())
        throw InvalidInput("weight vector length does not match scores");
    double acc = 0.0;
    for (std::size_t i = 0; i < w.weights.size(); ++i) acc += w.weights[i] * batch.scores[i];
    return acc / static_cast<double>(batch.scores.size());
}

} // namespace aar
