#include "aar/synth.hpp"

#include <cmath>

#include "aar/rng.hpp"

namespace aar {

void SynthTabularSpec::validate() const {
    if (n_normal < 2 || dim < 1) throw InvalidInput("synth spec: need n_normal >= 2 and dim >= 1");
    if (n_anomaly < 0) throw InvalidInput("synth spec: n_anomaly must be >= 0");
    if (latent_rank < 1 || anomaly_dirs < 1)
        throw InvalidInput("synth spec: latent_rank and anomaly_dirs must be >= 1");
    if (latent_rank + anomaly_dirs > dim)
        throw InvalidInput("synth spec: latent_rank + anomaly_dirs must not exceed dim");
    if (noise_std < 0.0 || anomaly_spread < 0.0 || latent_scale <= 0.0)
        throw InvalidInput("synth spec: scales must be nonnegative");
}

namespace {

// Orthonormal columns via modified Gram-Schmidt on a random Gaussian matrix.
std::vector<std::vector<double>> random_orthonormal(int dim, int count, Rng& rng) {
    std::vector<std::vector<double>> cols;
    cols.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(cols.size()) < count) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (auto& x : v) x = rng.normal();
        for (const auto& u : cols) {
            double dot = 0.0;
            for (int i = 0; i < dim; ++i) dot += v[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
            for (int i = 0; i < dim; ++i) v[static_cast<std::size_t>(i)] -= dot * u[static_cast<std::size_t>(i)];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue; // near-degenerate draw, try again
        for (auto& x : v) x /= norm;
        cols.push_back(std::move(v));
    }
    return cols;
}

} // namespace

Dataset make_synth_tabular(const SynthTabularSpec& spec) {
    spec.validate();
    Rng rng(mix_seed(spec.structure_seed, 0x7ab));

    auto basis = random_orthonormal(spec.dim, spec.latent_rank + spec.anomaly_dirs, rng);
    const int k = spec.latent_rank;
    const double anom_noise = spec.anomaly_noise_std < 0.0 ? spec.noise_std : spec.anomaly_noise_std;

    Dataset ds;
    ds.name = spec.name;
    const std::size_t n = static_cast<std::size_t>(spec.n_normal + spec.n_anomaly);
    ds.features = Matrix(n, static_cast<std::size_t>(spec.dim));
    ds.labels.assign(n, 0);

    auto emit = [&](std::size_t row, bool anomaly) {
        auto x = ds.features.row(row);
        double lat_scale = spec.latent_scale * (anomaly ? spec.anomaly_latent_scale : 1.0);
        for (int j = 0; j < k; ++j) {
            double z = rng.normal(0.0, lat_scale);
            for (int i = 0; i < spec.dim; ++i)
                x[static_cast<std::size_t>(i)] += z * basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        }
        if (anomaly) {
            std::size_t dir = k + rng.integer(static_cast<std::uint64_t>(spec.anomaly_dirs));
            double mag = spec.anomaly_shift + std::fabs(rng.normal(0.0, spec.anomaly_spread));
            for (int i = 0; i < spec.dim; ++i)
                x[static_cast<std::size_t>(i)] += mag * basis[dir][static_cast<std::size_t>(i)];
        }
        double ns = anomaly ? anom_noise : spec.noise_std;
        for (int i = 0; i < spec.dim; ++i) x[static_cast<std::size_t>(i)] += rng.normal(0.0, ns);
        ds.labels[row] = anomaly ? 1 : 0;
    };

    for (int r = 0; r < spec.n_normal; ++r) emit(static_cast<std::size_t>(r), false);
    for (int r = 0; r < spec.n_anomaly; ++r) emit(static_cast<std::size_t>(spec.n_normal + r), true);
    ds.validate();
    return ds;
}

Dataset make_blob_dataset(int n_normal, int n_anomaly, int dim, double shift, double noise,
                          std::uint64_t seed) {
    if (n_normal < 2 || dim < 1 || n_anomaly < 0) throw InvalidInput("bad blob parameters");
    Rng rng(mix_seed(seed, 0xb10b));
    Dataset ds;
    ds.name = "blob";
    const std::size_t n = static_cast<std::size_t>(n_normal + n_anomaly);
    ds.features = Matrix(n, static_cast<std::size_t>(dim));
    ds.labels.assign(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        bool anomaly = r >= static_cast<std::size_t>(n_normal);
        for (int c = 0; c < dim; ++c)
            ds.features.at(r, static_cast<std::size_t>(c)) =
                rng.normal(anomaly ? shift : 0.0, noise);
        ds.labels[r] = anomaly ? 1 : 0;
    }
    ds.validate();
    return ds;
}

} // namespace aar
