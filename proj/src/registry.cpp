#include "aar/registry.hpp"

#include <cstdlib>
#include <fstream>

#include <json.hpp>

namespace aar {

DatasetRegistry DatasetRegistry::load(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw InvalidInput("cannot open dataset registry: " + json_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("malformed registry JSON: " + std::string(e.what()));
    }
    if (!j.contains("datasets") || !j.at("datasets").is_object())
        throw InvalidInput("registry needs a 'datasets' object");

    const std::filesystem::path base = json_path.parent_path();
    DatasetRegistry reg;
    for (const auto& [name, spec] : j.at("datasets").items()) {
        Entry e;
        e.name = name;
        try {
            e.meta.declared_n = spec.value("n", 0L);
            e.meta.declared_d = spec.value("d", 0L);
            e.meta.declared_outliers = spec.value("outliers", 0L);
            e.meta.batch_size = spec.value("batch_size", 0);
            e.meta.epochs = spec.value("epochs", 0);
            if (spec.contains("hidden"))
                e.meta.hidden_dims = spec.at("hidden").get<std::vector<int>>();

            if (spec.contains("synth")) {
                const auto& s = spec.at("synth");
                e.is_synth = true;
                e.synth.name = name;
                e.synth.n_normal = static_cast<int>(e.meta.declared_n - e.meta.declared_outliers);
                e.synth.n_anomaly = static_cast<int>(e.meta.declared_outliers);
                e.synth.dim = static_cast<int>(e.meta.declared_d);
                e.synth.latent_rank = s.value("latent_rank", 2);
                e.synth.latent_scale = s.value("latent_scale", 1.0);
                e.synth.noise_std = s.value("noise_std", 0.1);
                e.synth.anomaly_dirs = s.value("anomaly_dirs", 1);
                e.synth.anomaly_shift = s.value("anomaly_shift", 1.0);
                e.synth.anomaly_spread = s.value("anomaly_spread", 0.5);
                e.synth.anomaly_latent_scale = s.value("anomaly_latent_scale", 1.0);
                e.synth.anomaly_noise_std = s.value("anomaly_noise_std", -1.0);
                e.synth.structure_seed = s.value("structure_seed", std::uint64_t{1});
                e.synth.validate();
            } else if (spec.contains("csv")) {
                e.csv = base / spec.at("csv").get<std::string>();
                e.schema = spec.contains("schema")
                               ? base / spec.at("schema").get<std::string>()
                               : std::filesystem::path(e.csv).replace_extension(".schema.json");
            } else {
                throw InvalidInput("registry entry '" + name + "' needs 'synth' or 'csv'");
            }
        } catch (const nlohmann::json::exception& ex) {
            throw InvalidInput("registry entry '" + name + "': " + ex.what());
        }
        reg.entries_.push_back(std::move(e));
    }
    return reg;
}

std::filesystem::path DatasetRegistry::default_path(const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("AAR_DATA_REGISTRY"); env && *env)
        return std::filesystem::path(env);
    return fallback;
}

std::vector<std::string> DatasetRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

bool DatasetRegistry::contains(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

const DatasetRegistry::Entry& DatasetRegistry::find(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw InvalidInput("dataset '" + name + "' not found in registry");
}

DatasetMeta DatasetRegistry::meta(const std::string& name) const { return find(name).meta; }

Dataset DatasetRegistry::resolve(const std::string& name) const {
    const Entry& e = find(name);
    Dataset ds;
    if (e.is_synth) {
        ds = make_synth_tabular(e.synth);
    } else {
        ds = load_csv_dataset(e.csv, load_csv_schema(e.schema));
        ds.name = e.name;
    }
    ds.meta = e.meta;
    return ds;
}

} // namespace aar
