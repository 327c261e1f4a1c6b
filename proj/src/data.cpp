#include "aar/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "aar/rng.hpp"

namespace aar {

void Dataset::validate() const {
    if (features.rows == 0 || features.cols == 0) throw InvalidInput("dataset is empty");
    if (labels.size() != features.rows) throw InvalidInput("dataset labels misaligned");
    for (double v : features.data)
        if (!std::isfinite(v)) throw InvalidInput("dataset contains non-finite features");
    for (int y : labels)
        if (y != 0 && y != 1) throw InvalidInput("dataset labels must be 0 or 1");
}

std::size_t Dataset::anomaly_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    for (auto& c : cells) {
        std::size_t b = c.find_first_not_of(" \t");
        std::size_t e = c.find_last_not_of(" \t");
        c = (b == std::string::npos) ? std::string{} : c.substr(b, e - b + 1);
    }
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

} // namespace

CsvSchema load_csv_schema(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw InvalidInput("cannot open schema file: " + json_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("malformed schema JSON in " + json_path.string() + ": " + e.what());
    }
    if (!j.contains("label_column")) throw InvalidInput("schema missing label_column");
    CsvSchema schema;
    schema.label_column = j.at("label_column").get<std::string>();
    auto as_text = [](const nlohmann::json& v) {
        return v.is_string() ? v.get<std::string>() : v.dump();
    };
    if (j.contains("anomaly_value")) schema.anomaly_value = as_text(j.at("anomaly_value"));
    if (j.contains("normal_value")) schema.normal_value = as_text(j.at("normal_value"));
    return schema;
}

Dataset load_csv_dataset(const std::filesystem::path& csv_path, const CsvSchema& schema) {
    std::ifstream in(csv_path);
    if (!in) throw InvalidInput("cannot open dataset file: " + csv_path.string());

    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("dataset file has no header: " + csv_path.string());
    std::vector<std::string> header = split_csv_line(line);

    std::size_t label_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == schema.label_column) label_col = i;
    if (label_col == header.size())
        throw InvalidInput("label column '" + schema.label_column + "' not found in " + csv_path.string());

    const std::size_t d = header.size() - 1;
    if (d == 0) throw InvalidInput("dataset has no feature columns");

    std::vector<double> values;
    std::vector<int> labels;
    std::vector<std::string> row_errors;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            row_errors.push_back("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(header.size()) + " cells, got " +
                                 std::to_string(cells.size()));
            continue;
        }
        std::vector<double> row;
        row.reserve(d);
        bool ok = true;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == label_col) continue;
            double v;
            if (!parse_double(cells[i], v) || !std::isfinite(v)) {
                row_errors.push_back("line " + std::to_string(line_no) + ": bad value '" + cells[i] +
                                     "' in column " + header[i]);
                ok = false;
                break;
            }
            row.push_back(v);
        }
        if (!ok) continue;
        const std::string& cell = cells[label_col];
        int y;
        if (cell == schema.anomaly_value) {
            y = 1;
        } else if (cell == schema.normal_value) {
            y = 0;
        } else {
            row_errors.push_back("line " + std::to_string(line_no) + ": unknown label '" + cell + "'");
            continue;
        }
        values.insert(values.end(), row.begin(), row.end());
        labels.push_back(y);
    }

    if (!row_errors.empty()) {
        std::ostringstream msg;
        msg << csv_path.string() << ": " << row_errors.size() << " bad row(s):";
        for (const auto& e : row_errors) msg << "\n  " << e;
        throw InvalidInput(msg.str());
    }
    if (labels.empty()) throw InvalidInput("dataset has no data rows: " + csv_path.string());

    Dataset ds;
    ds.name = csv_path.stem().string();
    ds.features.rows = labels.size();
    ds.features.cols = d;
    ds.features.data = std::move(values);
    ds.labels = std::move(labels);
    ds.validate();
    return ds;
}

void write_csv_dataset(const Dataset& ds, const std::filesystem::path& csv_path,
                       const std::filesystem::path& schema_path) {
    ds.validate();
    std::ofstream out(csv_path);
    if (!out) throw InvalidInput("cannot write dataset file: " + csv_path.string());
    out.precision(17);
    for (std::size_t j = 0; j < ds.features.cols; ++j) out << "f" << j << ",";
    out << "label\n";
    for (std::size_t i = 0; i < ds.features.rows; ++i) {
        for (std::size_t j = 0; j < ds.features.cols; ++j) out << ds.features.at(i, j) << ",";
        out << ds.labels[i] << "\n";
    }
    std::ofstream sout(schema_path);
    if (!sout) throw InvalidInput("cannot write schema file: " + schema_path.string());
    sout << nlohmann::json{{"label_column", "label"}, {"anomaly_value", "1"}}.dump(2) << "\n";
}

ScalerParams fit_scaler(const Matrix& train) {
    if (train.empty()) throw InvalidInput("cannot fit scaler on empty matrix");
    const std::size_t n = train.rows, d = train.cols;
    ScalerParams p;
    p.mean.assign(d, 0.0);
    p.stddev.assign(d, 0.0);
    p.lo.assign(d, std::numeric_limits<double>::infinity());
    p.hi.assign(d, -std::numeric_limits<double>::infinity());

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) p.mean[j] += train.at(i, j);
    for (std::size_t j = 0; j < d; ++j) p.mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double c = train.at(i, j) - p.mean[j];
            p.stddev[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) p.stddev[j] = std::sqrt(p.stddev[j] / static_cast<double>(n));

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            if (p.stddev[j] == 0.0) continue;
            double z = (train.at(i, j) - p.mean[j]) / p.stddev[j];
            p.lo[j] = std::min(p.lo[j], z);
            p.hi[j] = std::max(p.hi[j], z);
        }
    return p;
}

Matrix apply_scaler(const ScalerParams& p, const Matrix& m) {
    if (m.cols != p.mean.size()) throw InvalidInput("scaler dimension mismatch");
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (p.stddev[j] == 0.0 || p.hi[j] == p.lo[j]) {
                out.at(i, j) = 0.5; // feature carried no information in train
                continue;
            }
            double z = (m.at(i, j) - p.mean[j]) / p.stddev[j];
            out.at(i, j) = (z - p.lo[j]) / (p.hi[j] - p.lo[j]);
        }
    return out;
}

PreprocessResult preprocess(const Matrix& train, const std::vector<Matrix>& others) {
    PreprocessResult res;
    res.params = fit_scaler(train);
    res.train = apply_scaler(res.params, train);
    res.others.reserve(others.size());
    for (const auto& m : others) res.others.push_back(apply_scaler(res.params, m));
    return res;
}

ContaminatedSplit make_contaminated_split(const Dataset& ds, double gamma0, std::uint64_t seed,
                                          NoiseMode noise) {
    ds.validate();
    if (!(gamma0 >= 0.0 && gamma0 < 0.5)) throw InvalidInput("gamma0 must lie in [0, 0.5)");

    std::vector<std::size_t> normal_idx, anomaly_idx;
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
        (ds.labels[i] == 0 ? normal_idx : anomaly_idx).push_back(i);
    if (normal_idx.size() < 2) throw InvalidInput("dataset needs at least 2 normal samples");
    if (gamma0 > 0.0 && anomaly_idx.empty())
        throw InvalidInput("contamination requested but dataset has no anomalies");

    Rng rng(mix_seed(seed, 0xda7a));
    rng.shuffle(normal_idx);
    const std::size_t n_train_normals = normal_idx.size() / 2;

    std::vector<std::size_t> train_rows(normal_idx.begin(), normal_idx.begin() + n_train_normals);
    std::vector<std::size_t> test_normal_rows(normal_idx.begin() + n_train_normals, normal_idx.end());

    // Test set: remaining normals plus every true anomaly.
    std::vector<std::size_t> test_rows = test_normal_rows;
    test_rows.insert(test_rows.end(), anomaly_idx.begin(), anomaly_idx.end());

    Matrix raw_train = ds.features.gather(train_rows);
    Matrix raw_test = ds.features.gather(test_rows);
    std::vector<int> test_labels(test_normal_rows.size(), 0);
    test_labels.insert(test_labels.end(), anomaly_idx.size(), 1);

    // Synthetic anomalies: sampled test anomalies plus per-feature Gaussian
    // noise with the test anomalies' std.
    const std::size_t k =
        gamma0 > 0.0
            ? static_cast<std::size_t>(std::floor(gamma0 / (1.0 - gamma0) *
                                                  static_cast<double>(n_train_normals)))
            : 0;
    std::vector<bool> injected(raw_train.rows, false);
    if (k > 0) {
        Matrix anomalies = ds.features.gather(anomaly_idx);
        std::vector<double> feat_std(ds.features.cols, 0.0);
        if (noise == NoiseMode::GaussianFromTestAnomalies && anomalies.rows > 1) {
            std::vector<double> mean(ds.features.cols, 0.0);
            for (std::size_t i = 0; i < anomalies.rows; ++i)
                for (std::size_t j = 0; j < anomalies.cols; ++j) mean[j] += anomalies.at(i, j);
            for (auto& v : mean) v /= static_cast<double>(anomalies.rows);
            for (std::size_t i = 0; i < anomalies.rows; ++i)
                for (std::size_t j = 0; j < anomalies.cols; ++j) {
                    double c = anomalies.at(i, j) - mean[j];
                    feat_std[j] += c * c;
                }
            for (auto& v : feat_std) v = std::sqrt(v / static_cast<double>(anomalies.rows));
        }

        // Without replacement while sources last, with replacement beyond.
        std::vector<std::size_t> source(anomalies.rows);
        std::iota(source.begin(), source.end(), std::size_t{0});
        rng.shuffle(source);
        std::vector<std::size_t> picks(k);
        for (std::size_t i = 0; i < k; ++i)
            picks[i] = (i < source.size()) ? source[i]
                                           : static_cast<std::size_t>(rng.integer(anomalies.rows));

        Matrix train_all(raw_train.rows + k, raw_train.cols);
        std::copy(raw_train.data.begin(), raw_train.data.end(), train_all.data.begin());
        for (std::size_t i = 0; i < k; ++i) {
            auto dst = train_all.row(raw_train.rows + i);
            auto src = anomalies.row(picks[i]);
            for (std::size_t j = 0; j < train_all.cols; ++j) {
                double eps = (noise == NoiseMode::GaussianFromTestAnomalies)
                                 ? rng.normal(0.0, feat_std[j])
                                 : 0.0;
                dst[j] = src[j] + eps;
            }
        }
        raw_train = std::move(train_all);
        injected.resize(raw_train.rows, true);
    }

    ContaminatedSplit split;
    split.gamma0 = gamma0;
    split.seed = seed;
    split.train_is_injected_anomaly = std::move(injected);
    split.test_labels = std::move(test_labels);

    PreprocessResult pre = preprocess(raw_train, {raw_test});
    split.scaler = std::move(pre.params);
    split.train_features = std::move(pre.train);
    split.test_features = std::move(pre.others[0]);
    return split;
}

ScoreBatch synth_labeled_scores(const MixtureSpec& mix, int n, std::uint64_t seed, bool clip_at_zero) {
    mix.validate();
    if (n < 2) throw InvalidInput("need at least 2 draws");

    Rng rng(mix_seed(seed, 0x5c07e5));
    ScoreBatch batch;
    batch.scores.resize(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        bool abnormal = rng.uniform() >= mix.alpha;
        const GaussianParams& g = abnormal ? mix.abnormal : mix.normal;
        double x = rng.normal(g.mean, g.stddev);
        if (mix.truncate_at_zero) {
            while (x < 0.0) x = rng.normal(g.mean, g.stddev);
        } else if (clip_at_zero) {
            x = std::max(x, 0.0);
        }
        batch.scores[static_cast<std::size_t>(i)] = x;
        labels[static_cast<std::size_t>(i)] = abnormal ? 1 : 0;
    }
    batch.labels = std::move(labels);
    return batch;
}

} // namespace aar
