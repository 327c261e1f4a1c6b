#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "aar/data.hpp"
#include "aar/nn.hpp"

namespace aar {

// Area under the ROC curve as the Mann-Whitney statistic:
// P(score_anomaly > score_normal) + 0.5 * P(tie). O(n log n) rank sweep.
// Throws InvalidInput unless both classes are present.
double auroc(const ScoreBatch& batch);

enum class EvalMethod { Aar, MzOnly, FixedQuantile, Iqr, Huber, Mse };

std::string to_string(EvalMethod m);
EvalMethod eval_method_from_string(const std::string& s);

struct ExperimentConfig {
    std::string dataset;
    ModelKind model = ModelKind::Autoencoder;
    std::vector<int> hidden_dims; // empty: take the dataset's registry meta
    int batch_size = 0;           // 0: take the dataset's registry meta
    EvalMethod method = EvalMethod::Aar;
    double gamma0 = 0.2;
    double fixed_gamma = 0.1; // FixedQuantile rejection ratio
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    int epochs = 0; // 0: the dataset's registry hint, falling back to 100
    double learning_rate = 1e-4;
    double weight_decay = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int warmup_epochs = 15;
    double z = 2.5;
    double soft_weight = 0.1;
    double huber_delta = 1.0;
    int dsvdd_pretrain_epochs = 0;
    int jobs = 1;
    // Default is hard failure of the whole experiment when any seed fails;
    // setting this records the failure and excludes the seed from the mean.
    bool allow_seed_failures = false;

    void validate() const;
    RejectionPolicy rejection_policy() const;
    LossKind loss_kind() const;
};

struct SeedResult {
    std::uint64_t seed = 0;
    double auroc = 0.0;
    bool failed = false;
    std::string error;
    TrainHistory history;
};

struct RunReport {
    ExperimentConfig config;
    std::string dataset_name;
    std::vector<SeedResult> per_seed;
    double mean_auroc = 0.0;
    double std_auroc = 0.0; // sample std over succeeded seeds
    double wall_seconds = 0.0;
};

// Full per-seed pipeline: contaminated split -> scaled features -> training ->
// test scores -> AUROC, aggregated over seeds. Deterministic per seed; seeds
// may run on cfg.jobs worker threads with identical results.
RunReport run_experiment(const ExperimentConfig& cfg, const Dataset& ds);

struct SummaryCell {
    std::string method;
    double gamma0 = 0.0;
    double mean_auroc = 0.0;
    int n_datasets = 0;
};

struct StabilityAvg {
    std::string method;
    double avg_auroc = 0.0; // mean of the gamma0 = 0 and gamma0 = 0.2 cells
};

struct SummaryTable {
    std::vector<SummaryCell> cells;
    std::vector<StabilityAvg> stability; // present when both gamma0 0 and 0.2 exist
};

// Unweighted mean of dataset means per (method, gamma0). All reports must
// share seeds, epochs and model kind, and every method must cover the same
// dataset set; anything else is InvalidInput.
SummaryTable aggregate(const std::vector<RunReport>& reports);

// Serialization. The JSON payload of a report is deterministic; wall time
// lives in a separate "timing" object so reruns are byte-identical elsewhere.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const RunReport& report, const std::string& build_id);

void write_run_report(const RunReport& report, const std::string& build_id,
                      const std::filesystem::path& dir);
void write_summary_csv(const SummaryTable& table, const std::filesystem::path& path);
void write_threshold_trace(const SeedResult& seed_result, const std::filesystem::path& path);

} // namespace aar
