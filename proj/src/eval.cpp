#include "aar/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <thread>

namespace aar {

double auroc(const ScoreBatch& batch) {
    batch.validate();
    if (!batch.labels) throw InvalidInput("auroc needs labels");
    const auto& labels = *batch.labels;
    const std::size_t n = batch.scores.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return batch.scores[a] < batch.scores[b]; });

    // Midranks over tie groups; AUROC from the rank-sum of anomalies.
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && batch.scores[order[j]] == batch.scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) {
                rank_sum_pos += midrank;
                ++n_pos;
            }
        i = j;
    }
    std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw InvalidInput("auroc needs both classes");
    double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::string to_string(EvalMethod m) {
    switch (m) {
    case EvalMethod::Aar: return "aar";
    case EvalMethod::MzOnly: return "mz";
    case EvalMethod::FixedQuantile: return "fixed_quantile";
    case EvalMethod::Iqr: return "iqr";
    case EvalMethod::Huber: return "huber";
    case EvalMethod::Mse: return "mse";
    }
    return "?";
}

EvalMethod eval_method_from_string(const std::string& s) {
    if (s == "aar") return EvalMethod::Aar;
    if (s == "mz" || s == "mz_only") return EvalMethod::MzOnly;
    if (s == "fixed_quantile" || s == "fixedq") return EvalMethod::FixedQuantile;
    if (s == "iqr") return EvalMethod::Iqr;
    if (s == "huber") return EvalMethod::Huber;
    if (s == "mse") return EvalMethod::Mse;
    throw InvalidInput("unknown method '" + s + "'");
}

void ExperimentConfig::validate() const {
    if (dataset.empty()) throw InvalidInput("config: dataset is required");
    if (seeds.empty()) throw InvalidInput("config: seeds must be nonempty");
    if (epochs < 0) throw InvalidInput("config: epochs must be >= 1 (or 0 for the registry default)");
    if (!(gamma0 >= 0.0 && gamma0 < 0.5)) throw InvalidInput("config: gamma0 must lie in [0, 0.5)");
    if (!(fixed_gamma >= 0.0 && fixed_gamma <= 1.0))
        throw InvalidInput("config: fixed_gamma must lie in [0, 1]");
    if (!(soft_weight >= 0.0 && soft_weight <= 1.0))
        throw InvalidInput("config: soft_weight must lie in [0, 1]");
    if (warmup_epochs < 0) throw InvalidInput("config: warmup_epochs must be >= 0");
    if (!(z > 0.0)) throw InvalidInput("config: z must be > 0");
    if (jobs < 1) throw InvalidInput("config: jobs must be >= 1");
}

RejectionPolicy ExperimentConfig::rejection_policy() const {
    RejectionPolicy p;
    p.warmup_epochs = warmup_epochs;
    p.z = z;
    p.soft_weight = soft_weight;
    p.fixed_gamma = fixed_gamma;
    switch (method) {
    case EvalMethod::Aar: p.method = RejectionMethod::Aar; break;
    case EvalMethod::MzOnly: p.method = RejectionMethod::MzOnly; break;
    case EvalMethod::FixedQuantile: p.method = RejectionMethod::FixedQuantile; break;
    case EvalMethod::Iqr: p.method = RejectionMethod::Iqr; break;
    case EvalMethod::Huber:
    case EvalMethod::Mse: p.method = RejectionMethod::None; break;
    }
    return p;
}

LossKind ExperimentConfig::loss_kind() const {
    return method == EvalMethod::Huber ? LossKind::PseudoHuber : LossKind::SquaredError;
}

namespace {

SeedResult run_one_seed(const ExperimentConfig& cfg, const Dataset& ds, std::uint64_t seed,
                        int batch_size, const std::vector<int>& hidden) {
    SeedResult res;
    res.seed = seed;

    ContaminatedSplit split = make_contaminated_split(ds, cfg.gamma0, seed);

    ModelSpec spec = make_model_spec(cfg.model, static_cast<int>(ds.features.cols), hidden);

    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = std::min<int>(batch_size, static_cast<int>(split.train_features.rows));
    tc.learning_rate = cfg.learning_rate;
    tc.weight_decay = cfg.weight_decay;
    tc.beta1 = cfg.beta1;
    tc.beta2 = cfg.beta2;
    tc.adam_epsilon = cfg.adam_epsilon;
    tc.seed = seed;
    tc.loss = cfg.loss_kind();
    tc.huber_delta = cfg.huber_delta;
    tc.dsvdd_pretrain_epochs = cfg.dsvdd_pretrain_epochs;

    TrainResult tr = train(spec, split.train_features, cfg.rejection_policy(), tc);

    ScoreBatch test_scores = anomaly_scores(tr.model, split.test_features);
    test_scores.labels = split.test_labels;
    res.auroc = auroc(test_scores);
    res.history = std::move(tr.history);
    return res;
}

double json_nan_safe(double v) { return std::isfinite(v) ? v : 0.0; }

nlohmann::json history_digest(const TrainHistory& h) {
    nlohmann::json j;
    if (h.mean_loss.empty()) return j;
    auto total = [](const std::vector<long>& v) {
        return std::accumulate(v.begin(), v.end(), 0L);
    };
    j["final_mean_loss"] = h.mean_loss.back();
    j["total_hard_rejected"] = total(h.hard_rejected);
    j["total_soft_rejected"] = total(h.soft_rejected);
    j["total_gmm_fallbacks"] = total(h.gmm_fallbacks);
    j["final_tau_n_mean"] = json_nan_safe(h.tau_n_mean.back());
    j["final_tau_mean"] = json_nan_safe(h.tau_mean.back());
    return j;
}

} // namespace

RunReport run_experiment(const ExperimentConfig& cfg, const Dataset& ds) {
    cfg.validate();
    ds.validate();

    std::vector<int> hidden = cfg.hidden_dims;
    int batch_size = cfg.batch_size;
    if (hidden.empty()) {
        if (!ds.meta || ds.meta->hidden_dims.empty())
            throw InvalidInput("no hidden_dims in config and no registry meta for " + ds.name);
        hidden = ds.meta->hidden_dims;
    }
    if (batch_size == 0) {
        if (!ds.meta || ds.meta->batch_size == 0)
            throw InvalidInput("no batch_size in config and no registry meta for " + ds.name);
        batch_size = ds.meta->batch_size;
    }

    auto t0 = std::chrono::steady_clock::now();

    // The echoed config carries every resolved value, not the 0 sentinels.
    ExperimentConfig eff = cfg;
    eff.hidden_dims = hidden;
    eff.batch_size = batch_size;
    if (eff.epochs == 0) eff.epochs = (ds.meta && ds.meta->epochs > 0) ? ds.meta->epochs : 100;

    RunReport report;
    report.config = eff;
    report.dataset_name = ds.name;
    report.per_seed.resize(eff.seeds.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= eff.seeds.size()) break;
            try {
                report.per_seed[i] = run_one_seed(eff, ds, eff.seeds[i], batch_size, hidden);
            } catch (const std::exception& e) {
                report.per_seed[i].seed = eff.seeds[i];
                report.per_seed[i].failed = true;
                report.per_seed[i].error = e.what();
            }
        }
    };

    int n_workers = std::min<int>(eff.jobs, static_cast<int>(eff.seeds.size()));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<double> ok;
    for (const auto& sr : report.per_seed) {
        if (sr.failed) {
            if (!eff.allow_seed_failures)
                throw NumericalFailure("seed " + std::to_string(sr.seed) + " failed: " + sr.error);
        } else {
            ok.push_back(sr.auroc);
        }
    }
    if (ok.empty()) throw NumericalFailure("all seeds failed");

    double mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
    double var = 0.0;
    for (double v : ok) var += (v - mean) * (v - mean);
    report.mean_auroc = mean;
    report.std_auroc = ok.size() > 1 ? std::sqrt(var / static_cast<double>(ok.size() - 1)) : 0.0;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

SummaryTable aggregate(const std::vector<RunReport>& reports) {
    if (reports.empty()) throw InvalidInput("aggregate: no reports");

    const auto& ref = reports.front().config;
    for (const auto& r : reports) {
        if (r.config.model != ref.model || r.config.seeds != ref.seeds ||
            r.config.epochs != ref.epochs)
            throw InvalidInput("aggregate: reports mix incomparable configurations");
    }

    // (method, gamma0) -> dataset -> mean
    std::map<std::pair<std::string, double>, std::map<std::string, double>> groups;
    for (const auto& r : reports) {
        auto key = std::make_pair(to_string(r.config.method), r.config.gamma0);
        auto [it, inserted] = groups[key].try_emplace(r.dataset_name, r.mean_auroc);
        if (!inserted) throw InvalidInput("aggregate: duplicate report for dataset " + r.dataset_name);
    }

    // Cross-method comparisons require a common dataset set per gamma0.
    std::map<double, std::set<std::string>> expected;
    for (const auto& [key, by_ds] : groups) {
        std::set<std::string> names;
        for (const auto& [name, _] : by_ds) names.insert(name);
        auto [it, inserted] = expected.try_emplace(key.second, names);
        if (!inserted && it->second != names)
            throw InvalidInput("aggregate: methods cover different dataset sets");
    }

    SummaryTable table;
    for (const auto& [key, by_ds] : groups) {
        double acc = 0.0;
        for (const auto& [_, v] : by_ds) acc += v;
        table.cells.push_back(
            {key.first, key.second, acc / static_cast<double>(by_ds.size()),
             static_cast<int>(by_ds.size())});
    }

    // Stability/robustness average when the clean and 0.2-contaminated runs
    // are both present.
    std::map<std::string, std::map<double, double>> by_method;
    for (const auto& c : table.cells) by_method[c.method][c.gamma0] = c.mean_auroc;
    for (const auto& [method, vals] : by_method) {
        auto a = vals.find(0.0);
        auto b = vals.find(0.2);
        if (a != vals.end() && b != vals.end())
            table.stability.push_back({method, 0.5 * (a->second + b->second)});
    }
    return table;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = cfg.dataset;
    j["model"] = cfg.model == ModelKind::Autoencoder ? "ae" : "dsvdd";
    j["hidden_dims"] = cfg.hidden_dims;
    j["batch_size"] = cfg.batch_size;
    j["method"] = to_string(cfg.method);
    j["gamma0"] = cfg.gamma0;
    j["fixed_gamma"] = cfg.fixed_gamma;
    j["seeds"] = cfg.seeds;
    j["epochs"] = cfg.epochs;
    j["learning_rate"] = cfg.learning_rate;
    j["weight_decay"] = cfg.weight_decay;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["adam_epsilon"] = cfg.adam_epsilon;
    j["warmup_epochs"] = cfg.warmup_epochs;
    j["z"] = cfg.z;
    j["soft_weight"] = cfg.soft_weight;
    j["huber_delta"] = cfg.huber_delta;
    j["dsvdd_pretrain_epochs"] = cfg.dsvdd_pretrain_epochs;
    j["jobs"] = cfg.jobs;
    j["allow_seed_failures"] = cfg.allow_seed_failures;
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidInput("config must be a JSON object");
    ExperimentConfig cfg;
    try {
        cfg.dataset = j.at("dataset").get<std::string>();
        if (j.contains("model")) {
            std::string m = j.at("model").get<std::string>();
            if (m == "ae")
                cfg.model = ModelKind::Autoencoder;
            else if (m == "dsvdd")
                cfg.model = ModelKind::Dsvdd;
            else
                throw InvalidInput("config: model must be 'ae' or 'dsvdd'");
        }
        if (j.contains("hidden_dims")) cfg.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
        if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
        if (j.contains("method")) cfg.method = eval_method_from_string(j.at("method").get<std::string>());
        if (j.contains("gamma0")) cfg.gamma0 = j.at("gamma0").get<double>();
        if (j.contains("fixed_gamma")) cfg.fixed_gamma = j.at("fixed_gamma").get<double>();
        if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
        if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
        if (j.contains("weight_decay")) cfg.weight_decay = j.at("weight_decay").get<double>();
        if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
        if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
        if (j.contains("adam_epsilon")) cfg.adam_epsilon = j.at("adam_epsilon").get<double>();
        if (j.contains("warmup_epochs")) cfg.warmup_epochs = j.at("warmup_epochs").get<int>();
        if (j.contains("z")) cfg.z = j.at("z").get<double>();
        if (j.contains("soft_weight")) cfg.soft_weight = j.at("soft_weight").get<double>();
        if (j.contains("huber_delta")) cfg.huber_delta = j.at("huber_delta").get<double>();
        if (j.contains("dsvdd_pretrain_epochs"))
            cfg.dsvdd_pretrain_epochs = j.at("dsvdd_pretrain_epochs").get<int>();
        if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
        if (j.contains("allow_seed_failures"))
            cfg.allow_seed_failures = j.at("allow_seed_failures").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

nlohmann::json report_to_json(const RunReport& report, const std::string& build_id) {
    nlohmann::json j;
    j["build_id"] = build_id;
    j["config"] = config_to_json(report.config);
    j["dataset"] = report.dataset_name;

    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& sr : report.per_seed) {
        nlohmann::json s;
        s["seed"] = sr.seed;
        s["failed"] = sr.failed;
        if (sr.failed)
            s["error"] = sr.error;
        else
            s["auroc"] = sr.auroc;
        s["history"] = history_digest(sr.history);
        seeds.push_back(std::move(s));
    }
    j["results"] = {{"per_seed", std::move(seeds)},
                    {"mean_auroc", report.mean_auroc},
                    {"std_auroc", report.std_auroc}};
    j["timing"] = {{"wall_seconds", report.wall_seconds}};
    return j;
}

void write_run_report(const RunReport& report, const std::string& build_id,
                      const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.json");
        if (!out) throw InvalidInput("cannot write " + (dir / "report.json").string());
        out << report_to_json(report, build_id).dump(2) << "\n";
    }
    for (const auto& sr : report.per_seed) {
        if (sr.failed) continue;
        write_threshold_trace(sr, dir / ("trace_seed" + std::to_string(sr.seed) + ".txt"));
    }
}

void write_summary_csv(const SummaryTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << "method,gamma0,mean_auroc,n_datasets\n";
    out.precision(12);
    for (const auto& c : table.cells)
        out << c.method << "," << c.gamma0 << "," << c.mean_auroc << "," << c.n_datasets << "\n";
    for (const auto& s : table.stability)
        out << s.method << ",avg(0;0.2)," << s.avg_auroc << ",\n";
}

void write_threshold_trace(const SeedResult& sr, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << "# epoch mean_loss hard soft fallbacks tau_n tau_i tau_sigma tau\n";
    out.precision(12);
    const TrainHistory& h = sr.history;
    for (std::size_t e = 0; e < h.mean_loss.size(); ++e) {
        out << (e + 1) << " " << h.mean_loss[e] << " " << h.hard_rejected[e] << " "
            << h.soft_rejected[e] << " " << h.gmm_fallbacks[e] << " " << h.tau_n_mean[e] << " "
            << h.tau_i_mean[e] << " " << h.tau_sigma_mean[e] << " " << h.tau_mean[e] << "\n";
    }
}

} // namespace aar
