#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aar/matrix.hpp"
#include "aar/rejection.hpp"
#include "aar/score_stats.hpp"

namespace aar {

enum class ModelKind { Autoencoder, Dsvdd };

// Feed-forward backbone description. layer_dims are the encoder widths; the
// autoencoder decoder mirrors them back to the input dimension. Hidden layers
// are linear -> batch norm -> leaky ReLU; the terminal layer (reconstruction
// for the AE, embedding for DSVDD) is purely linear.
struct ModelSpec {
    ModelKind kind = ModelKind::Autoencoder;
    int input_dim = 0;
    std::vector<int> layer_dims;
    bool use_bias = true;   // must be false for DSVDD
    bool batch_norm = true;
    bool bn_affine = true;  // must be false for DSVDD (no additive terms at all)
    double leaky_relu_slope = 0.01;

    void validate() const;
};

// Spec with the DSVDD bias/affine constraints applied for the given kind.
ModelSpec make_model_spec(ModelKind kind, int input_dim, std::vector<int> hidden_dims,
                          bool batch_norm = true);

// One linear(+BN+activation) stage with offsets into the flat parameter and
// running-statistics vectors.
struct LayerPlan {
    std::size_t in = 0, out = 0;
    bool bias = false;
    bool bn = false;
    bool bn_affine = false;
    bool act = false;
    std::size_t w_off = 0, b_off = 0, gamma_off = 0, beta_off = 0;
    std::size_t stat_off = 0; // running mean at stat_off, running var at stat_off + out
};

struct Model {
    ModelSpec spec;
    std::vector<LayerPlan> layers;
    std::vector<double> params;
    std::vector<double> running_stats; // BN state, not trainable
    std::optional<std::vector<double>> center; // DSVDD only
    std::uint64_t rng_seed = 0;

    std::size_t embedding_dim() const;
};

// Deterministic initialization: weights and biases uniform in
// +-sqrt(1/fan_in), BN gamma 1 / beta 0, running stats (0, 1).
Model init_model(const ModelSpec& spec, std::uint64_t seed);

// Per-sample anomaly scores in scoring mode (BN uses running statistics).
// AE: squared L2 reconstruction error; DSVDD: squared distance to the center.
ScoreBatch anomaly_scores(const Model& model, const Matrix& batch);

// Same scores under training-mode batch statistics, with no state update.
// This is the score the training loop thresholds on.
ScoreBatch training_scores(const Model& model, const Matrix& batch);

// DSVDD center: mean embedding over a full scoring-mode pass, with small
// coordinates pushed to +-0.1 away from zero.
Model init_dsvdd_center(Model model, const Matrix& data);

enum class LossKind { SquaredError, PseudoHuber };

// Gradient of L = (1/N) sum_i w_i * s_i over all trainable parameters, with
// the weights treated as constants. Uses training-mode batch statistics.
std::vector<double> weighted_grad(const Model& model, const Matrix& batch, const WeightVector& w);
std::vector<double> weighted_grad(const Model& model, const Matrix& batch, const WeightVector& w,
                                  LossKind loss, double huber_delta);

// Matching loss value for gradient checks (training mode, no state update).
double weighted_training_loss(const Model& model, const Matrix& batch, const WeightVector& w,
                              LossKind loss = LossKind::SquaredError, double huber_delta = 1.0);

struct OptimizerState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    long step = 0;
    double learning_rate = 1e-4;
    double weight_decay = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState for_model(const Model& m, double lr = 1e-4, double wd = 1e-6);
};

// Adam with L2-style weight decay added to the gradient.
void adam_step(Model& model, std::span<const double> grads, OptimizerState& opt);

// Pseudo-Huber of the residual norm: delta^2 * (sqrt(1 + (r/delta)^2) - 1).
ScoreBatch huber_scores(const Model& model, const Matrix& batch, double delta);

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 1e-4;
    double weight_decay = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::SquaredError;
    double huber_delta = 1.0;
    // DSVDD: epochs of bias-free AE pretraining before the one-class phase;
    // 0 takes the center directly from the initial embeddings.
    int dsvdd_pretrain_epochs = 0;

    void validate() const;
};

// Everything recorded per epoch. Threshold traces average the finite
// per-batch values; NaN marks epochs where a threshold never existed.
struct TrainHistory {
    std::vector<double> mean_loss;
    std::vector<long> hard_rejected;
    std::vector<long> soft_rejected;
    std::vector<long> gmm_fallbacks;
    std::vector<double> tau_n_mean;
    std::vector<double> tau_i_mean;
    std::vector<double> tau_sigma_mean;
    std::vector<double> tau_mean;
};

struct TrainResult {
    Model model;
    TrainHistory history;
};

// Shuffled mini-batch training with per-batch weight assignment. Aborts only
// on NumericalFailure; degenerate batches degrade per the policy.
TrainResult train(const ModelSpec& spec, const Matrix& train_data, const RejectionPolicy& policy,
                  const TrainConfig& cfg);

} // namespace aar
