#include "aar/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aar/rng.hpp"

namespace aar {

namespace {

constexpr double kBnEpsilon = 1e-5;
constexpr double kBnMomentum = 0.1;
constexpr double kCenterEpsilon = 0.1;
constexpr std::size_t kChunkRows = 4096;

constexpr std::uint64_t kInitStream = 0x11;
constexpr std::uint64_t kShuffleStream = 0x22;
constexpr std::uint64_t kPretrainStream = 0x33;

std::vector<std::size_t> network_dims(const ModelSpec& spec) {
    std::vector<std::size_t> dims;
    dims.push_back(static_cast<std::size_t>(spec.input_dim));
    for (int h : spec.layer_dims) dims.push_back(static_cast<std::size_t>(h));
    if (spec.kind == ModelKind::Autoencoder) {
        for (std::size_t i = spec.layer_dims.size(); i-- > 1;)
            dims.push_back(static_cast<std::size_t>(spec.layer_dims[i - 1]));
        dims.push_back(static_cast<std::size_t>(spec.input_dim));
    }
    return dims;
}

struct PlanSizes {
    std::size_t params = 0;
    std::size_t stats = 0;
};

std::vector<LayerPlan> build_layers(const ModelSpec& spec, PlanSizes& sizes) {
    std::vector<std::size_t> dims = network_dims(spec);
    std::vector<LayerPlan> layers;
    layers.reserve(dims.size() - 1);
    std::size_t p = 0, s = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const bool terminal = (l + 2 == dims.size());
        LayerPlan lp;
        lp.in = dims[l];
        lp.out = dims[l + 1];
        lp.bias = spec.use_bias;
        lp.bn = spec.batch_norm && !terminal;
        lp.bn_affine = lp.bn && spec.bn_affine;
        lp.act = !terminal;
        lp.w_off = p;
        p += lp.in * lp.out;
        if (lp.bias) {
            lp.b_off = p;
            p += lp.out;
        }
        if (lp.bn_affine) {
            lp.gamma_off = p;
            p += lp.out;
            lp.beta_off = p;
            p += lp.out;
        }
        if (lp.bn) {
            lp.stat_off = s;
            s += 2 * lp.out;
        }
        layers.push_back(lp);
    }
    sizes.params = p;
    sizes.stats = s;
    return layers;
}

enum class ForwardMode { Training, Scoring };

// Per-layer buffers retained for backprop.
struct LayerCache {
    Matrix lin;                   // linear output
    Matrix xhat;                  // BN-normalized values
    std::vector<double> inv_std;  // BN 1/sqrt(var + eps) per feature
    Matrix out;                   // layer output (after activation)
};

// Runs the network over a batch. In Training mode BN uses batch statistics;
// update_running additionally folds them into the running estimates.
Matrix forward(const Model& m, const Matrix& X, ForwardMode mode, bool update_running,
               std::vector<double>* running_stats, std::vector<LayerCache>* cache) {
    if (X.cols != static_cast<std::size_t>(m.spec.input_dim))
        throw InvalidInput("batch feature dimension does not match the model");
    const double slope = m.spec.leaky_relu_slope;
    Matrix cur = X;
    if (cache) cache->clear();
    for (const LayerPlan& lp : m.layers) {
        const std::size_t B = cur.rows;
        Matrix z(B, lp.out);
        const double* W = m.params.data() + lp.w_off;
        for (std::size_t b = 0; b < B; ++b) {
            const double* xr = cur.data.data() + b * lp.in;
            double* zr = z.data.data() + b * lp.out;
            for (std::size_t o = 0; o < lp.out; ++o) {
                const double* wr = W + o * lp.in;
                double acc = lp.bias ? m.params[lp.b_off + o] : 0.0;
                for (std::size_t i = 0; i < lp.in; ++i) acc += xr[i] * wr[i];
                zr[o] = acc;
            }
        }

        LayerCache lc;
        lc.lin = z;
        Matrix a = std::move(z);

        if (lp.bn) {
            std::vector<double> mean(lp.out, 0.0), var(lp.out, 0.0);
            if (mode == ForwardMode::Training) {
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t o = 0; o < lp.out; ++o) mean[o] += a.at(b, o);
                for (auto& v : mean) v /= static_cast<double>(B);
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t o = 0; o < lp.out; ++o) {
                        double c = a.at(b, o) - mean[o];
                        var[o] += c * c;
                    }
                for (auto& v : var) v /= static_cast<double>(B);
                if (update_running && running_stats && B >= 2) {
                    double unbias = static_cast<double>(B) / static_cast<double>(B - 1);
                    for (std::size_t o = 0; o < lp.out; ++o) {
                        double& rm = (*running_stats)[lp.stat_off + o];
                        double& rv = (*running_stats)[lp.stat_off + lp.out + o];
                        rm = (1.0 - kBnMomentum) * rm + kBnMomentum * mean[o];
                        rv = (1.0 - kBnMomentum) * rv + kBnMomentum * var[o] * unbias;
                    }
                }
            } else {
                for (std::size_t o = 0; o < lp.out; ++o) {
                    mean[o] = m.running_stats[lp.stat_off + o];
                    var[o] = m.running_stats[lp.stat_off + lp.out + o];
                }
            }
            lc.inv_std.resize(lp.out);
            for (std::size_t o = 0; o < lp.out; ++o)
                lc.inv_std[o] = 1.0 / std::sqrt(var[o] + kBnEpsilon);
            Matrix xh(B, lp.out);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t o = 0; o < lp.out; ++o)
                    xh.at(b, o) = (a.at(b, o) - mean[o]) * lc.inv_std[o];
            lc.xhat = xh;
            if (lp.bn_affine) {
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t o = 0; o < lp.out; ++o)
                        a.at(b, o) = m.params[lp.gamma_off + o] * xh.at(b, o) +
                                     m.params[lp.beta_off + o];
            } else {
                a = xh;
            }
        }

        if (lp.act) {
            for (double& v : a.data) v = v > 0.0 ? v : slope * v;
        }
        lc.out = a;
        if (cache) cache->push_back(std::move(lc));
        cur = std::move(a);
    }
    return cur;
}

double squared_row_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

std::vector<double> scores_from_output(const Model& m, const Matrix& X, const Matrix& out) {
    std::vector<double> s(out.rows);
    if (m.spec.kind == ModelKind::Autoencoder) {
        for (std::size_t b = 0; b < out.rows; ++b)
            s[b] = squared_row_distance(out.row(b), X.row(b));
    } else {
        if (!m.center) throw InvalidInput("DSVDD model has no center; call init_dsvdd_center");
        for (std::size_t b = 0; b < out.rows; ++b)
            s[b] = squared_row_distance(out.row(b), std::span<const double>(*m.center));
    }
    return s;
}

double loss_transform(double s, LossKind kind, double delta) {
    if (kind == LossKind::SquaredError) return s;
    return delta * delta * (std::sqrt(1.0 + s / (delta * delta)) - 1.0);
}

double loss_transform_deriv(double s, LossKind kind, double delta) {
    if (kind == LossKind::SquaredError) return 1.0;
    return 0.5 / std::sqrt(1.0 + s / (delta * delta));
}

// Backprop through the cached forward pass given dL/d(output) and the batch
// that fed the first layer.
std::vector<double> backward(const Model& m, const Matrix& X, const std::vector<LayerCache>& cache,
                             Matrix d_out) {
    std::vector<double> grads(m.params.size(), 0.0);
    const double slope = m.spec.leaky_relu_slope;

    for (std::size_t li = m.layers.size(); li-- > 0;) {
        const LayerPlan& lp = m.layers[li];
        const LayerCache& lc = cache[li];
        const Matrix& input = (li == 0) ? X : cache[li - 1].out;
        const std::size_t B = d_out.rows;

        if (lp.act) {
            // d/dz of leaky ReLU evaluated at its input (the BN output).
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t o = 0; o < lp.out; ++o) {
                    double pre = lp.bn
                                     ? (lp.bn_affine
                                            ? m.params[lp.gamma_off + o] * lc.xhat.at(b, o) +
                                                  m.params[lp.beta_off + o]
                                            : lc.xhat.at(b, o))
                                     : lc.lin.at(b, o);
                    if (pre <= 0.0) d_out.at(b, o) *= slope;
                }
        }

        Matrix dz(B, lp.out);
        if (lp.bn) {
            // Gradients flow through the batch statistics as well.
            for (std::size_t o = 0; o < lp.out; ++o) {
                double gamma = lp.bn_affine ? m.params[lp.gamma_off + o] : 1.0;
                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0, sum_d = 0.0;
                for (std::size_t b = 0; b < B; ++b) {
                    double d = d_out.at(b, o);
                    double dxh = d * gamma;
                    sum_d += d;
                    sum_dxhat += dxh;
                    sum_dxhat_xhat += dxh * lc.xhat.at(b, o);
                }
                if (lp.bn_affine) {
                    double dgamma = 0.0;
                    for (std::size_t b = 0; b < B; ++b)
                        dgamma += d_out.at(b, o) * lc.xhat.at(b, o);
                    grads[lp.gamma_off + o] += dgamma;
                    grads[lp.beta_off + o] += sum_d;
                }
                double invB = 1.0 / static_cast<double>(B);
                for (std::size_t b = 0; b < B; ++b) {
                    double dxh = d_out.at(b, o) * gamma;
                    dz.at(b, o) = lc.inv_std[o] * invB *
                                  (static_cast<double>(B) * dxh - sum_dxhat -
                                   lc.xhat.at(b, o) * sum_dxhat_xhat);
                }
            }
        } else {
            dz = d_out;
        }

        // Parameter and input gradients of the linear stage.
        double* dW = grads.data() + lp.w_off;
        for (std::size_t b = 0; b < B; ++b) {
            const double* xr = input.data.data() + b * lp.in;
            const double* dzr = dz.data.data() + b * lp.out;
            for (std::size_t o = 0; o < lp.out; ++o) {
                double g = dzr[o];
                if (g == 0.0) continue;
                double* dwr = dW + o * lp.in;
                for (std::size_t i = 0; i < lp.in; ++i) dwr[i] += g * xr[i];
                if (lp.bias) grads[lp.b_off + o] += g;
            }
        }

        if (li > 0) {
            Matrix dx(B, lp.in);
            const double* W = m.params.data() + lp.w_off;
            for (std::size_t b = 0; b < B; ++b) {
                double* dxr = dx.data.data() + b * lp.in;
                const double* dzr = dz.data.data() + b * lp.out;
                for (std::size_t o = 0; o < lp.out; ++o) {
                    double g = dzr[o];
                    if (g == 0.0) continue;
                    const double* wr = W + o * lp.in;
                    for (std::size_t i = 0; i < lp.in; ++i) dxr[i] += g * wr[i];
                }
            }
            d_out = std::move(dx);
        }
    }
    return grads;
}

// dL/d(output) rows for the weighted score loss.
Matrix output_gradient(const Model& m, const Matrix& X, const Matrix& out,
                       const std::vector<double>& scores, const WeightVector& w, LossKind kind,
                       double delta) {
    const std::size_t B = out.rows;
    const double invN = 1.0 / static_cast<double>(B);
    Matrix d(B, out.cols);
    for (std::size_t b = 0; b < B; ++b) {
        double u = w.weights[b] * loss_transform_deriv(scores[b], kind, delta) * invN;
        if (u == 0.0) continue;
        if (m.spec.kind == ModelKind::Autoencoder) {
            for (std::size_t j = 0; j < out.cols; ++j)
                d.at(b, j) = u * 2.0 * (out.at(b, j) - X.at(b, j));
        } else {
            const std::vector<double>& c = *m.center;
            for (std::size_t j = 0; j < out.cols; ++j)
                d.at(b, j) = u * 2.0 * (out.at(b, j) - c[j]);
        }
    }
    return d;
}

// Copies encoder linear weights and shared BN running stats from a bias-free
// pretraining AE into a DSVDD model with the same encoder widths.
void copy_encoder(const Model& src_ae, Model& dst) {
    const std::size_t enc = dst.layers.size();
    for (std::size_t l = 0; l < enc; ++l) {
        const LayerPlan& a = src_ae.layers[l];
        const LayerPlan& b = dst.layers[l];
        if (a.in != b.in || a.out != b.out)
            throw InvalidInput("pretraining encoder shape mismatch");
        std::copy_n(src_ae.params.begin() + static_cast<std::ptrdiff_t>(a.w_off), a.in * a.out,
                    dst.params.begin() + static_cast<std::ptrdiff_t>(b.w_off));
        if (a.bn && b.bn)
            std::copy_n(src_ae.running_stats.begin() + static_cast<std::ptrdiff_t>(a.stat_off),
                        2 * a.out,
                        dst.running_stats.begin() + static_cast<std::ptrdiff_t>(b.stat_off));
    }
}

} // namespace

void ModelSpec::validate() const {
    if (input_dim < 1) throw InvalidInput("input_dim must be positive");
    if (layer_dims.empty()) throw InvalidInput("layer_dims must be nonempty");
    for (int h : layer_dims)
        if (h < 1) throw InvalidInput("layer widths must be positive");
    if (kind == ModelKind::Dsvdd && use_bias)
        throw InvalidInput("DSVDD layers must not carry biases");
    if (kind == ModelKind::Dsvdd && batch_norm && bn_affine)
        throw InvalidInput("DSVDD batch norm must not carry affine terms");
    if (!(leaky_relu_slope >= 0.0 && leaky_relu_slope < 1.0))
        throw InvalidInput("leaky ReLU slope must lie in [0, 1)");
}

ModelSpec make_model_spec(ModelKind kind, int input_dim, std::vector<int> hidden_dims,
                          bool batch_norm) {
    ModelSpec spec;
    spec.kind = kind;
    spec.input_dim = input_dim;
    spec.layer_dims = std::move(hidden_dims);
    spec.batch_norm = batch_norm;
    if (kind == ModelKind::Dsvdd) {
        spec.use_bias = false;
        spec.bn_affine = false;
    }
    spec.validate();
    return spec;
}

std::size_t Model::embedding_dim() const {
    return static_cast<std::size_t>(spec.layer_dims.back());
}

Model init_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Model m;
    m.spec = spec;
    m.rng_seed = seed;
    PlanSizes sizes;
    m.layers = build_layers(spec, sizes);
    m.params.assign(sizes.params, 0.0);
    m.running_stats.assign(sizes.stats, 0.0);

    Rng rng(seed);
    for (const LayerPlan& lp : m.layers) {
        double bound = std::sqrt(1.0 / static_cast<double>(lp.in));
        for (std::size_t k = 0; k < lp.in * lp.out; ++k)
            m.params[lp.w_off + k] = rng.uniform(-bound, bound);
        if (lp.bias)
            for (std::size_t o = 0; o < lp.out; ++o)
                m.params[lp.b_off + o] = rng.uniform(-bound, bound);
        if (lp.bn_affine)
            for (std::size_t o = 0; o < lp.out; ++o) m.params[lp.gamma_off + o] = 1.0;
        if (lp.bn)
            for (std::size_t o = 0; o < lp.out; ++o) m.running_stats[lp.stat_off + lp.out + o] = 1.0;
    }
    return m;
}

ScoreBatch anomaly_scores(const Model& model, const Matrix& batch) {
    if (batch.empty()) throw InvalidInput("empty batch");
    ScoreBatch sb;
    sb.scores.reserve(batch.rows);
    for (std::size_t start = 0; start < batch.rows; start += kChunkRows) {
        std::size_t n = std::min(kChunkRows, batch.rows - start);
        Matrix chunk(n, batch.cols);
        std::copy_n(batch.data.begin() + static_cast<std::ptrdiff_t>(start * batch.cols),
                    n * batch.cols, chunk.data.begin());
        Matrix out = forward(model, chunk, ForwardMode::Scoring, false, nullptr, nullptr);
        for (double s : scores_from_output(model, chunk, out)) sb.scores.push_back(s);
    }
    return sb;
}

ScoreBatch training_scores(const Model& model, const Matrix& batch) {
    if (batch.empty()) throw InvalidInput("empty batch");
    Matrix out = forward(model, batch, ForwardMode::Training, false, nullptr, nullptr);
    ScoreBatch sb;
    sb.scores = scores_from_output(model, batch, out);
    return sb;
}

Model init_dsvdd_center(Model model, const Matrix& data) {
    if (model.spec.kind != ModelKind::Dsvdd) throw InvalidInput("model is not DSVDD");
    if (data.empty()) throw InvalidInput("center initialization needs data");
    const std::size_t dim = model.embedding_dim();
    std::vector<double> center(dim, 0.0);
    for (std::size_t start = 0; start < data.rows; start += kChunkRows) {
        std::size_t n = std::min(kChunkRows, data.rows - start);
        Matrix chunk(n, data.cols);
        std::copy_n(data.data.begin() + static_cast<std::ptrdiff_t>(start * data.cols),
                    n * data.cols, chunk.data.begin());
        Matrix out = forward(model, chunk, ForwardMode::Scoring, false, nullptr, nullptr);
        for (std::size_t b = 0; b < out.rows; ++b)
            for (std::size_t j = 0; j < dim; ++j) center[j] += out.at(b, j);
    }
    for (double& c : center) {
        c /= static_cast<double>(data.rows);
        // Coordinates too close to zero invite the trivial collapsed solution.
        if (std::fabs(c) < kCenterEpsilon) c = c < 0.0 ? -kCenterEpsilon : kCenterEpsilon;
    }
    model.center = std::move(center);
    return model;
}

std::vector<double> weighted_grad(const Model& model, const Matrix& batch, const WeightVector& w) {
    return weighted_grad(model, batch, w, LossKind::SquaredError, 1.0);
}

std::vector<double> weighted_grad(const Model& model, const Matrix& batch, const WeightVector& w,
                                  LossKind loss, double huber_delta) {
    if (w.weights.size() != batch.rows) throw InvalidInput("weight vector length does not match batch");
    std::vector<LayerCache> cache;
    Matrix out = forward(model, batch, ForwardMode::Training, false, nullptr, &cache);
    std::vector<double> scores = scores_from_output(model, batch, out);
    Matrix d = output_gradient(model, batch, out, scores, w, loss, huber_delta);
    return backward(model, batch, cache, std::move(d));
}

double weighted_training_loss(const Model& model, const Matrix& batch, const WeightVector& w,
                              LossKind loss, double huber_delta) {
    if (w.weights.size() != batch.rows) throw InvalidInput("weight vector length does not match batch");
    Matrix out = forward(model, batch, ForwardMode::Training, false, nullptr, nullptr);
    std::vector<double> scores = scores_from_output(model, batch, out);
    double acc = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        acc += w.weights[i] * loss_transform(scores[i], loss, huber_delta);
    return acc / static_cast<double>(scores.size());
}

OptimizerState OptimizerState::for_model(const Model& m, double lr, double wd) {
    OptimizerState opt;
    opt.first_moment.assign(m.params.size(), 0.0);
    opt.second_moment.assign(m.params.size(), 0.0);
    opt.learning_rate = lr;
    opt.weight_decay = wd;
    return opt;
}

void adam_step(Model& model, std::span<const double> grads, OptimizerState& opt) {
    if (grads.size() != model.params.size() || opt.first_moment.size() != model.params.size())
        throw InvalidInput("gradient/optimizer shape mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw NumericalFailure("non-finite gradient in adam_step");

    opt.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        double g = grads[i] + opt.weight_decay * model.params[i];
        opt.first_moment[i] = opt.beta1 * opt.first_moment[i] + (1.0 - opt.beta1) * g;
        opt.second_moment[i] = opt.beta2 * opt.second_moment[i] + (1.0 - opt.beta2) * g * g;
        double mhat = opt.first_moment[i] / bc1;
        double vhat = opt.second_moment[i] / bc2;
        model.params[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
    }
}

ScoreBatch huber_scores(const Model& model, const Matrix& batch, double delta) {
    if (!(delta > 0.0)) throw InvalidInput("huber delta must be positive");
    ScoreBatch sse = anomaly_scores(model, batch);
    for (double& s : sse.scores) s = loss_transform(s, LossKind::PseudoHuber, delta);
    return sse;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidInput("epochs must be >= 1");
    if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidInput("learning_rate must be positive");
    if (weight_decay < 0.0) throw InvalidInput("weight_decay must be >= 0");
    if (!(huber_delta > 0.0)) throw InvalidInput("huber_delta must be positive");
    if (dsvdd_pretrain_epochs < 0) throw InvalidInput("dsvdd_pretrain_epochs must be >= 0");
}

TrainResult train(const ModelSpec& spec, const Matrix& train_data, const RejectionPolicy& policy,
                  const TrainConfig& cfg) {
    spec.validate();
    cfg.validate();
    policy.validate();
    if (train_data.empty()) throw InvalidInput("training data is empty");
    if (static_cast<std::size_t>(cfg.batch_size) > train_data.rows)
        throw InvalidInput("batch_size exceeds the training set");

    Model model = init_model(spec, mix_seed(cfg.seed, kInitStream));

    if (spec.kind == ModelKind::Dsvdd) {
        if (cfg.dsvdd_pretrain_epochs > 0) {
            ModelSpec ae_spec = spec;
            ae_spec.kind = ModelKind::Autoencoder; // stays bias-free so weights transfer
            TrainConfig pre_cfg = cfg;
            pre_cfg.epochs = cfg.dsvdd_pretrain_epochs;
            pre_cfg.dsvdd_pretrain_epochs = 0;
            pre_cfg.loss = LossKind::SquaredError;
            pre_cfg.seed = mix_seed(cfg.seed, kPretrainStream);
            RejectionPolicy keep_all;
            keep_all.method = RejectionMethod::None;
            TrainResult pre = train(ae_spec, train_data, keep_all, pre_cfg);
            copy_encoder(pre.model, model);
        }
        model = init_dsvdd_center(std::move(model), train_data);
    }

    OptimizerState opt = OptimizerState::for_model(model, cfg.learning_rate, cfg.weight_decay);
    opt.beta1 = cfg.beta1;
    opt.beta2 = cfg.beta2;
    opt.epsilon = cfg.adam_epsilon;

    Rng shuffle_rng(mix_seed(cfg.seed, kShuffleStream));
    std::vector<std::size_t> order(train_data.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainHistory hist;
    const auto nan = std::numeric_limits<double>::quiet_NaN();

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);

        double loss_acc = 0.0;
        long batches = 0, hard = 0, soft = 0, fallbacks = 0;
        double tn_acc = 0.0, ti_acc = 0.0, ts_acc = 0.0, tau_acc = 0.0;
        long tn_cnt = 0, ti_cnt = 0, ts_cnt = 0, tau_cnt = 0;

        for (std::size_t start = 0; start < train_data.rows;
             start += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t n = std::min(static_cast<std::size_t>(cfg.batch_size),
                                     train_data.rows - start);
            Matrix batch = train_data.gather({order.data() + start, n});

            std::vector<LayerCache> cache;
            Matrix out = forward(model, batch, ForwardMode::Training, true, &model.running_stats,
                                 &cache);
            ScoreBatch sb;
            sb.scores = scores_from_output(model, batch, out);

            WeightAssignment wa = assign_weights(sb, epoch, policy, cfg.seed);

            double loss = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                loss += wa.weights.weights[i] * loss_transform(sb.scores[i], cfg.loss, cfg.huber_delta);
            loss /= static_cast<double>(n);

            Matrix d = output_gradient(model, batch, out, sb.scores, wa.weights, cfg.loss,
                                       cfg.huber_delta);
            std::vector<double> grads = backward(model, batch, cache, std::move(d));
            adam_step(model, grads, opt);

            loss_acc += loss;
            ++batches;
            for (double w : wa.weights.weights) {
                if (w == 0.0)
                    ++hard;
                else if (w < 1.0)
                    ++soft;
            }
            if (wa.gmm_fallback) ++fallbacks;
            if (std::isfinite(wa.thresholds.tau_n)) {
                tn_acc += wa.thresholds.tau_n;
                ++tn_cnt;
            }
            if (wa.thresholds.tau_i) {
                ti_acc += *wa.thresholds.tau_i;
                ++ti_cnt;
            }
            if (wa.thresholds.tau_sigma) {
                ts_acc += *wa.thresholds.tau_sigma;
                ++ts_cnt;
            }
            if (wa.thresholds.tau) {
                tau_acc += *wa.thresholds.tau;
                ++tau_cnt;
            }
        }

        hist.mean_loss.push_back(loss_acc / static_cast<double>(batches));
        hist.hard_rejected.push_back(hard);
        hist.soft_rejected.push_back(soft);
        hist.gmm_fallbacks.push_back(fallbacks);
        hist.tau_n_mean.push_back(tn_cnt ? tn_acc / static_cast<double>(tn_cnt) : nan);
        hist.tau_i_mean.push_back(ti_cnt ? ti_acc / static_cast<double>(ti_cnt) : nan);
        hist.tau_sigma_mean.push_back(ts_cnt ? ts_acc / static_cast<double>(ts_cnt) : nan);
        hist.tau_mean.push_back(tau_cnt ? tau_acc / static_cast<double>(tau_cnt) : nan);
    }

    return {std::move(model), std::move(hist)};
}

} // namespace aar
