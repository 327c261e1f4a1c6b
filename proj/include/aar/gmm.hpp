#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "aar/score_stats.hpp"

namespace aar {

struct GmmConfig {
    int max_iterations = 100;
    double convergence_tol = 1e-6;   // absolute log-likelihood change
    double variance_floor_rel = 1e-6; // times the batch variance
    double variance_floor_abs = 1e-12;
    enum class Init { QuantileSplit } init_scheme = Init::QuantileSplit;
};

// Two-component 1-D Gaussian mixture. Component 0 is the lower-mean (normal)
// component by construction.
struct GmmFit {
    std::array<double, 2> pi{};
    std::array<double, 2> mu{};
    std::array<double, 2> sigma{};
    double log_likelihood = 0.0;
    int iterations = 0;
    std::vector<double> log_likelihood_trace; // one entry per EM iteration
};

// EM on a score batch. The QuantileSplit initializer is deterministic in the
// batch contents, so `seed` only matters for future stochastic init schemes.
// Throws InvalidInput (< 4 samples), DegenerateInput (all scores equal) or
// NumericalFailure (non-finite likelihood).
GmmFit fit_gmm2(const ScoreBatch& batch, const GmmConfig& cfg, std::uint64_t seed);

// Score where the two component densities are equal, restricted to the open
// interval (mu_1, mu_2). Absent when no such crossing exists.
std::optional<double> intersection_threshold(const GmmFit& fit);

// tau_sigma = z * sigma_n + mu_n of the normal (lower-mean) component.
double z_sigma_threshold(const GmmFit& fit, double z);

// Final soft-rejection threshold tau = max(tau_sigma, tau_I).
double soft_threshold(const GmmFit& fit, double z);

// Threshold family produced by one weight assignment. tau_i / tau_sigma / tau
// are only present once the GMM stage is active (post-warm-up AAR).
struct ThresholdSet {
    double tau_n = 0.0; // +inf means "reject nothing"
    std::optional<double> tau_i;
    std::optional<double> tau_sigma;
    std::optional<double> tau;
};

} // namespace aar
