#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vehcov/calibration.hpp"
#include "vehcov/descriptor.hpp"
#include "vehcov/preprocess.hpp"
#include "vehcov/segmentation.hpp"

namespace vehcov {

/// One `[name]` block of a key=value file. Keys before the first header
/// land in a section with an empty name.
struct ConfigSection {
    std::string name;
    int line = 0;
    std::vector<std::pair<std::string, std::string>> entries;

    std::optional<std::string> get(const std::string& key) const;
};

/// Line-oriented `key=value` file with `[section]` headers and `#` / `;` comments.
struct ConfigFile {
    std::string source;
    std::vector<ConfigSection> sections;

    static ConfigFile parse(const std::string& text, const std::string& source = "<config>");
    static ConfigFile load(const std::filesystem::path& path);

    std::vector<const ConfigSection*> all(const std::string& name) const;
    const ConfigSection* find(const std::string& name) const;
};

// Typed value parsing; errors name the key.
double parse_real(const std::string& key, const std::string& value);
long parse_integer(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
Rect parse_rect(const std::string& key, const std::string& value);
Point parse_point(const std::string& key, const std::string& value);
std::string format_real(double v);

/// Everything a pipeline run needs.
struct RunConfig {
    std::filesystem::path input;
    Calibration calibration;
    CleanParams clean;
    SegmentationParams segmentation;
    FeatureSet feature_set = FeatureSet::CodeDefault;
    double eps = kDefaultEps;
    bool sample_covariance = false;
    std::filesystem::path ontology;
    std::filesystem::path labels;
    std::filesystem::path output_dir = "out";
    double iou_threshold = 0.5;
    std::uint64_t seed = 0;

    Normalization normalization() const {
        return sample_covariance ? Normalization::Sample : Normalization::Population;
    }

    /// Parameter invariants only; paths are checked when used.
    void validate() const;

    /// Relative paths resolve against `base_dir`. Unknown keys are rejected.
    static RunConfig parse(const std::string& text, const std::filesystem::path& base_dir = {},
                           const std::string& source = "<config>");
    static RunConfig load(const std::filesystem::path& path);
    std::string to_text() const;
};

}  // namespace vehcov
