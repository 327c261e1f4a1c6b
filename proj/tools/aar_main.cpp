// Command-line front end: experiment runs, parameter sweeps, the analytic
// robustness check, and synthetic dataset export. Every artifact embeds the
// resolved config and the build identifier; output directories are keyed by
// a hash of the resolved config so identical configs land in the same place.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aar/eval.hpp"
#include "aar/registry.hpp"
#include "aar/theory.hpp"

#ifndef AAR_BUILD_ID
#define AAR_BUILD_ID "unknown"
#endif

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string config_hash(const json& j) {
    // FNV-1a over the canonical dump; enough to key output directories.
    std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

void print_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

struct CommonArgs {
    std::string config_path;
    std::string registry_path;
    std::string out_dir = "runs";
};

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw aar::InvalidInput("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw aar::InvalidInput("malformed config JSON: " + std::string(e.what()));
    }
    return j;
}

// Resolves config + CLI overrides into a validated ExperimentConfig along
// with the registry path and output directory.
struct ResolvedRun {
    aar::ExperimentConfig cfg;
    std::filesystem::path registry;
    std::filesystem::path out_dir;
};

ResolvedRun resolve_run(const CommonArgs& common, const json& overrides) {
    json merged = json::object();
    if (!common.config_path.empty()) {
        json file = load_config_file(common.config_path);
        if (!file.is_object()) throw aar::InvalidInput("config root must be a JSON object");
        merged.update(file);
    }
    merged.update(overrides);

    ResolvedRun r;
    std::filesystem::path registry_fallback = "datasets/registry.json";
    if (merged.contains("registry")) {
        registry_fallback = merged.at("registry").get<std::string>();
        merged.erase("registry");
    }
    if (!common.registry_path.empty()) registry_fallback = common.registry_path;
    r.registry = aar::DatasetRegistry::default_path(registry_fallback);

    r.out_dir = common.out_dir;
    if (merged.contains("out_dir")) {
        if (common.out_dir == "runs") r.out_dir = merged.at("out_dir").get<std::string>();
        merged.erase("out_dir");
    }

    r.cfg = aar::config_from_json(merged);
    return r;
}

int cmd_run(const CommonArgs& common, const json& overrides) {
    ResolvedRun r = resolve_run(common, overrides);
    aar::DatasetRegistry registry = aar::DatasetRegistry::load(r.registry);
    aar::Dataset ds = registry.resolve(r.cfg.dataset);

    aar::RunReport report = aar::run_experiment(r.cfg, ds);

    json resolved = aar::config_to_json(report.config);
    std::filesystem::path dir = r.out_dir / std::filesystem::path(config_hash(resolved));
    aar::write_run_report(report, AAR_BUILD_ID, dir);

    aar::SummaryTable table = aar::aggregate({report});
    aar::write_summary_csv(table, dir / "summary.csv");

    std::cout << "dataset=" << report.dataset_name << " method=" << to_string(r.cfg.method)
              << " gamma0=" << r.cfg.gamma0 << " mean_auroc=" << report.mean_auroc
              << " std=" << report.std_auroc << "\n";
    std::cout << "report: " << (dir / "report.json").string() << "\n";
    return kExitOk;
}

int cmd_sweep(const CommonArgs& common, const json& overrides, const std::string& axis,
              const std::vector<double>& values) {
    if (values.empty()) throw aar::InvalidInput("sweep needs at least one value");

    ResolvedRun base = resolve_run(common, overrides);
    aar::DatasetRegistry registry = aar::DatasetRegistry::load(base.registry);
    aar::Dataset ds = registry.resolve(base.cfg.dataset);

    if (axis == "rejection_q" && base.cfg.method != aar::EvalMethod::FixedQuantile)
        throw aar::InvalidInput("axis rejection_q requires method fixed_quantile");
    if (axis == "z" || axis == "t_s") {
        if (base.cfg.method != aar::EvalMethod::Aar)
            throw aar::InvalidInput("axis " + axis + " requires method aar");
    }

    json sweep_id = aar::config_to_json(base.cfg);
    sweep_id["sweep_axis"] = axis;
    sweep_id["sweep_values"] = values;
    std::filesystem::path dir = base.out_dir / std::filesystem::path("sweep-" + config_hash(sweep_id));
    std::filesystem::create_directories(dir);

    std::ofstream csv(dir / "sweep.csv");
    if (!csv) throw aar::InvalidInput("cannot write sweep.csv");
    csv << "axis,value,dataset,method,gamma0,mean_auroc,std_auroc\n";
    csv.precision(12);

    for (double v : values) {
        aar::ExperimentConfig cfg = base.cfg; // shared seeds across the axis
        if (axis == "gamma0")
            cfg.gamma0 = v;
        else if (axis == "z")
            cfg.z = v;
        else if (axis == "t_s")
            cfg.soft_weight = v;
        else if (axis == "rejection_q")
            cfg.fixed_gamma = v;
        else
            throw aar::InvalidInput("unknown sweep axis '" + axis + "'");
        cfg.validate();

        aar::RunReport report = aar::run_experiment(cfg, ds);
        json resolved = aar::config_to_json(cfg);
        aar::write_run_report(report, AAR_BUILD_ID, dir / config_hash(resolved));
        csv << axis << "," << v << "," << report.dataset_name << "," << to_string(cfg.method)
            << "," << cfg.gamma0 << "," << report.mean_auroc << "," << report.std_auroc << "\n";
        std::cout << axis << "=" << v << " mean_auroc=" << report.mean_auroc << "\n";
    }
    std::cout << "sweep: " << (dir / "sweep.csv").string() << "\n";
    return kExitOk;
}

int cmd_theory(double alpha, double mu_n, double sigma_n, double mu_a, double sigma_a, int grid,
               bool truncate, const std::string& out_dir) {
    aar::MixtureSpec mix;
    mix.alpha = alpha;
    mix.normal = {mu_n, sigma_n};
    mix.abnormal = {mu_a, sigma_a};
    mix.truncate_at_zero = truncate;
    mix.validate();

    json cfg{{"alpha", alpha},   {"mu_n", mu_n},   {"sigma_n", sigma_n}, {"mu_a", mu_a},
             {"sigma_a", sigma_a}, {"grid", grid}, {"truncate", truncate}};
    std::filesystem::path dir = std::filesystem::path(out_dir) /
                                std::filesystem::path("theory-" + config_hash(cfg));
    std::filesystem::create_directories(dir);

    auto curve = aar::mixture_robustness_curve(mix, grid);

    std::string status = "ok";
    double tau_star = 0.0, q_star = 0.0;
    std::string verdict;
    try {
        auto opt = aar::optimal_quantile(mix);
        tau_star = opt.tau_star;
        q_star = opt.q_star;
        std::size_t argmax = 0;
        for (std::size_t i = 1; i < curve.size(); ++i)
            if (curve[i].r > curve[argmax].r) argmax = i;
        double cell = 1.0 / static_cast<double>(grid - 1);
        bool agree = std::fabs(curve[argmax].q - q_star) <= cell + 1e-12;
        verdict = agree ? "argmax within one grid cell of q_star"
                        : "argmax disagrees with q_star";
    } catch (const aar::NoRoot& e) {
        status = "no_root";
        verdict = e.what();
    }

    {
        std::ofstream out(dir / "curve.txt");
        out << "# q tau_q R\n";
        out.precision(12);
        for (const auto& p : curve) out << p.q << " " << p.tau_q << " " << p.r << "\n";
    }
    {
        json result{{"build_id", AAR_BUILD_ID}, {"config", cfg},     {"status", status},
                    {"tau_star", tau_star},     {"q_star", q_star},  {"verdict", verdict}};
        std::ofstream out(dir / "result.json");
        out << result.dump(2) << "\n";
    }

    std::cout << "status=" << status << " tau_star=" << tau_star << " q_star=" << q_star << "\n"
              << verdict << "\n"
              << "artifacts: " << dir.string() << "\n";
    return kExitOk;
}

int cmd_gen_data(const CommonArgs& common, const std::string& name, bool all,
                 const std::string& out_dir) {
    std::filesystem::path reg_path =
        aar::DatasetRegistry::default_path(common.registry_path.empty()
                                               ? std::filesystem::path("datasets/registry.json")
                                               : std::filesystem::path(common.registry_path));
    aar::DatasetRegistry registry = aar::DatasetRegistry::load(reg_path);
    std::vector<std::string> targets;
    if (all)
        targets = registry.names();
    else if (!name.empty())
        targets.push_back(name);
    else
        throw aar::InvalidInput("gen-data needs --name or --all");

    std::filesystem::create_directories(out_dir);
    for (const auto& t : targets) {
        aar::Dataset ds = registry.resolve(t);
        auto csv = std::filesystem::path(out_dir) / (t + ".csv");
        auto schema = std::filesystem::path(out_dir) / (t + ".schema.json");
        aar::write_csv_dataset(ds, csv, schema);
        std::cout << "wrote " << csv.string() << " (" << ds.features.rows << " x "
                  << ds.features.cols << ", " << ds.anomaly_count() << " anomalies)\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive and aggressive rejection for anomaly detection on contaminated data"};
    app.require_subcommand(1);

    CommonArgs common;

    // ---- run ----
    auto* run = app.add_subcommand("run", "Run one experiment from a config file");
    run->add_option("--config", common.config_path, "JSON config file");
    run->add_option("--registry", common.registry_path, "dataset registry path");
    run->add_option("--out", common.out_dir, "output directory");
    std::string o_dataset, o_method, o_model, o_seeds;
    double o_gamma0 = -1.0, o_fixed_gamma = -1.0, o_z = -1.0, o_ts = -1.0;
    int o_epochs = -1, o_jobs = -1, o_batch = -1;
    run->add_option("--dataset", o_dataset, "dataset name (overrides config)");
    run->add_option("--method", o_method, "aar|mz|fixed_quantile|iqr|huber|mse");
    run->add_option("--model", o_model, "ae|dsvdd");
    run->add_option("--gamma0", o_gamma0, "true contamination ratio");
    run->add_option("--fixed-gamma", o_fixed_gamma, "fixed rejection ratio");
    run->add_option("--z", o_z, "z-sigma multiplier");
    run->add_option("--t-s", o_ts, "soft rejection weight");
    run->add_option("--epochs", o_epochs, "training epochs");
    run->add_option("--batch-size", o_batch, "mini-batch size");
    run->add_option("--seeds", o_seeds, "comma-separated seed list");
    run->add_option("--jobs", o_jobs, "parallel seed workers");

    auto collect_overrides = [&]() {
        json o = json::object();
        if (!o_dataset.empty()) o["dataset"] = o_dataset;
        if (!o_method.empty()) o["method"] = o_method;
        if (!o_model.empty()) o["model"] = o_model;
        if (o_gamma0 >= 0.0) o["gamma0"] = o_gamma0;
        if (o_fixed_gamma >= 0.0) o["fixed_gamma"] = o_fixed_gamma;
        if (o_z >= 0.0) o["z"] = o_z;
        if (o_ts >= 0.0) o["soft_weight"] = o_ts;
        if (o_epochs >= 0) o["epochs"] = o_epochs;
        if (o_batch >= 0) o["batch_size"] = o_batch;
        if (o_jobs >= 0) o["jobs"] = o_jobs;
        if (!o_seeds.empty()) {
            std::vector<std::uint64_t> seeds;
            std::stringstream ss(o_seeds);
            std::string tok;
            while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
            o["seeds"] = seeds;
        }
        return o;
    };

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of an axis");
    std::string sweep_axis;
    std::vector<double> sweep_values;
    sweep->add_option("--config", common.config_path, "JSON config file");
    sweep->add_option("--registry", common.registry_path, "dataset registry path");
    sweep->add_option("--out", common.out_dir, "output directory");
    sweep->add_option("--axis", sweep_axis, "gamma0|z|t_s|rejection_q")->required();
    sweep->add_option("--values", sweep_values, "axis values")->required()->delimiter(',');
    sweep->add_option("--dataset", o_dataset, "dataset name (overrides config)");
    sweep->add_option("--method", o_method, "aar|mz|fixed_quantile|iqr|huber|mse");
    sweep->add_option("--model", o_model, "ae|dsvdd");
    sweep->add_option("--gamma0", o_gamma0, "true contamination ratio");
    sweep->add_option("--epochs", o_epochs, "training epochs");
    sweep->add_option("--seeds", o_seeds, "comma-separated seed list");
    sweep->add_option("--jobs", o_jobs, "parallel seed workers");

    // ---- theory ----
    auto* theory = app.add_subcommand("theory", "Robustness curve and optimal quantile of a mixture");
    double t_alpha = 0.8, t_mu_n = 2.0, t_sigma_n = 0.5, t_mu_a = 5.0, t_sigma_a = 1.0;
    int t_grid = 256;
    bool t_truncate = false;
    std::string t_out = "runs";
    theory->add_option("--alpha", t_alpha, "normal fraction in (0,1)");
    theory->add_option("--normal-mean", t_mu_n, "normal score mean");
    theory->add_option("--normal-std", t_sigma_n, "normal score std");
    theory->add_option("--abnormal-mean", t_mu_a, "abnormal score mean");
    theory->add_option("--abnormal-std", t_sigma_a, "abnormal score std");
    theory->add_option("--grid", t_grid, "quantile grid size (>= 16)");
    theory->add_flag("--truncate", t_truncate, "truncate densities at zero");
    theory->add_option("--out", t_out, "output directory");

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data", "Export registry datasets as CSV + schema");
    std::string g_name, g_out = "datasets/csv";
    bool g_all = false;
    gen->add_option("--registry", common.registry_path, "dataset registry path");
    gen->add_option("--name", g_name, "dataset name");
    gen->add_flag("--all", g_all, "export every registry dataset");
    gen->add_option("--out", g_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(common, collect_overrides());
        if (sweep->parsed()) return cmd_sweep(common, collect_overrides(), sweep_axis, sweep_values);
        if (theory->parsed())
            return cmd_theory(t_alpha, t_mu_n, t_sigma_n, t_mu_a, t_sigma_a, t_grid, t_truncate, t_out);
        if (gen->parsed()) return cmd_gen_data(common, g_name, g_all, g_out);
    } catch (const aar::InvalidInput& e) {
        print_error("invalid_input", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        print_error("runtime_failure", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
