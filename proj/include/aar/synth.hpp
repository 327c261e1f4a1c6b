#pragma once

#include <cstdint>
#include <string>

#include "aar/data.hpp"

namespace aar {

// Low-rank-plus-noise tabular generator. Normal samples live on a random
// k-dimensional linear manifold with isotropic observation noise; anomalies
// add an offset along one of a few fixed off-manifold directions, which gives
// them learnable structure: a model trained on contaminated data can absorb
// them, degrading test separation the way real contamination does.
struct SynthTabularSpec {
    std::string name;
    int n_normal = 0;
    int n_anomaly = 0;
    int dim = 0;
    int latent_rank = 2;
    double latent_scale = 1.0;
    double noise_std = 0.1;
    int anomaly_dirs = 1;
    double anomaly_shift = 1.0;         // deterministic off-manifold offset
    double anomaly_spread = 0.5;        // |N(0, spread)| added to the offset
    double anomaly_latent_scale = 1.0;  // anomalies' on-manifold variance factor
    double anomaly_noise_std = -1.0;    // < 0: same as noise_std
    std::uint64_t structure_seed = 1;   // fixes the manifold and directions

    void validate() const;
};

Dataset make_synth_tabular(const SynthTabularSpec& spec);

// Isotropic Gaussian blob with a shifted anomaly blob; the quick smoke-test
// dataset.
Dataset make_blob_dataset(int n_normal, int n_anomaly, int dim, double shift, double noise,
                          std::uint64_t seed);

} // namespace aar
