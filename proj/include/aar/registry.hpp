#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aar/data.hpp"
#include "aar/synth.hpp"

namespace aar {

// Named dataset catalog: per-dataset training meta (batch size, hidden
// widths) plus either a CSV source or a synthetic generator spec. CSV paths
// are resolved relative to the registry file.
class DatasetRegistry {
public:
    static DatasetRegistry load(const std::filesystem::path& json_path);

    // Registry path from AAR_DATA_REGISTRY, falling back to the given default.
    static std::filesystem::path default_path(const std::filesystem::path& fallback);

    std::vector<std::string> names() const;
    bool contains(const std::string& name) const;
    DatasetMeta meta(const std::string& name) const;
    Dataset resolve(const std::string& name) const;

private:
    struct Entry {
        std::string name;
        DatasetMeta meta;
        bool is_synth = false;
        SynthTabularSpec synth;
        std::filesystem::path csv;
        std::filesystem::path schema;
    };

    const Entry& find(const std::string& name) const;

    std::vector<Entry> entries_;
};

} // namespace aar
