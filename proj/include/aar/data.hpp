#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aar/matrix.hpp"
#include "aar/score_stats.hpp"
#include "aar/theory.hpp"

namespace aar {

// Declared training configuration for a named dataset (batch size and hidden
// widths), carried alongside the data when the registry knows them.
struct DatasetMeta {
    int batch_size = 0;
    std::vector<int> hidden_dims;
    int epochs = 0; // suggested training length; 0 means unspecified
    long declared_n = 0;
    long declared_d = 0;
    long declared_outliers = 0;
};

struct Dataset {
    std::string name;
    Matrix features;         // n x d
    std::vector<int> labels; // 0 normal, 1 anomaly
    std::optional<DatasetMeta> meta;

    void validate() const;
    std::size_t anomaly_count() const;
};

// Sidecar schema for CSV ingestion: which column carries the label and which
// cell values mark the two classes. Everything else must parse as a real
// feature; any other label value is a row error.
struct CsvSchema {
    std::string label_column;
    std::string anomaly_value = "1";
    std::string normal_value = "0";
};

CsvSchema load_csv_schema(const std::filesystem::path& json_path);

// Parses a headered CSV into a Dataset. Rows with non-finite or unparseable
// cells are reported with their line numbers in the thrown error.
Dataset load_csv_dataset(const std::filesystem::path& csv_path, const CsvSchema& schema);

void write_csv_dataset(const Dataset& ds, const std::filesystem::path& csv_path,
                       const std::filesystem::path& schema_path);

// Train statistics for standardize-then-min-max scaling.
struct ScalerParams {
    std::vector<double> mean, stddev; // standardization
    std::vector<double> lo, hi;       // min-max after standardization
};

ScalerParams fit_scaler(const Matrix& train);

// Standardize with train mean/std, then min-max to [0,1] with train extrema.
// Values outside the train range stay unclamped; a zero-variance feature maps
// to the constant 0.5.
Matrix apply_scaler(const ScalerParams& p, const Matrix& m);

struct PreprocessResult {
    Matrix train;
    std::vector<Matrix> others;
    ScalerParams params;
};

PreprocessResult preprocess(const Matrix& train, const std::vector<Matrix>& others);

enum class NoiseMode { None, GaussianFromTestAnomalies };

// Contaminated train/test split: half the normals train (plus injected
// anomalies), the other half plus all true anomalies test. Features are
// already scaled with statistics fitted on the contaminated train set.
struct ContaminatedSplit {
    Matrix train_features;
    Matrix test_features;
    std::vector<int> test_labels;
    std::vector<bool> train_is_injected_anomaly; // bookkeeping only
    ScalerParams scaler;
    double gamma0 = 0.0;
    std::uint64_t seed = 0;
};

// Injects k = floor(gamma0/(1-gamma0) * N_train_normals) synthetic anomalies
// built from test anomalies: sampled without replacement while possible, with
// replacement beyond that, plus zero-mean Gaussian noise with the test
// anomalies' per-feature std (mode GaussianFromTestAnomalies). Injection
// happens in raw feature space, before scaling.
ContaminatedSplit make_contaminated_split(const Dataset& ds, double gamma0, std::uint64_t seed,
                                          NoiseMode noise = NoiseMode::GaussianFromTestAnomalies);

// n labeled score draws from the mixture: label 1 with probability 1 - alpha.
// Negative draws are clipped to 0 when clip_at_zero is set (the mixture's own
// truncation flag switches to rejection sampling instead).
ScoreBatch synth_labeled_scores(const MixtureSpec& mix, int n, std::uint64_t seed,
                                bool clip_at_zero = true);

} // namespace aar
