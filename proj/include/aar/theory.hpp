#pragma once

#include <vector>

#include "aar/score_stats.hpp"

namespace aar {

struct GaussianParams {
    double mean = 0.0;
    double stddev = 1.0;
};

// Two-class score model S(x) = alpha * s_n(x) + (1 - alpha) * s_a(x).
// Densities are untruncated Gaussians by default; truncate_at_zero restricts
// them to [0, inf) with renormalization for sensitivity studies.
struct MixtureSpec {
    double alpha = 0.9;     // normal fraction, in (0, 1)
    GaussianParams normal;  // s_n
    GaussianParams abnormal; // s_a, mean must exceed the normal mean
    bool truncate_at_zero = false;

    void validate() const;

    double pdf_normal(double x) const;
    double pdf_abnormal(double x) const;
    double pdf(double x) const;
    double cdf(double x) const;
    double mean_normal() const;   // E[s_n], closed form
    double mean_abnormal() const; // E[s_a], closed form
};

struct RobustnessPoint {
    double q = 0.0;
    double tau_q = 0.0;
    double r = 0.0;
};

// R(q) on a labeled score set: the q-quantile tau_q is taken over all scores,
// then normalized cumulative score mass at or below tau_q is differenced
// between the classes.
RobustnessPoint empirical_robustness(const ScoreBatch& batch, double q);

// R(q) for an analytic mixture on a uniform q-grid (endpoints included).
// Quantiles are inverted by bisection; partial first moments use adaptive
// Simpson quadrature with absolute tolerance 1e-8.
std::vector<RobustnessPoint> mixture_robustness_curve(const MixtureSpec& mix, int grid);

struct OptimalQuantile {
    double tau_star = 0.0;
    double q_star = 0.0;
};

// The score threshold where s_n(tau)/s_a(tau) = E[s_n]/E[s_a], found by
// bisection on [mu_n, mu_a], and the corresponding quantile. Throws NoRoot
// when the bracket has no sign change.
OptimalQuantile optimal_quantile(const MixtureSpec& mix);

} // namespace aar
