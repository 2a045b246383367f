#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vehcov/descriptor.hpp"
#include "vehcov/image.hpp"

namespace vehcov {

enum class ClassLabel { Car, Truck, Multiple, Junk };

std::string to_string(ClassLabel label);
/// Accepts the class names case-insensitively.
ClassLabel parse_label(const std::string& name);
std::optional<ClassLabel> try_parse_label(const std::string& name);

/// Where a library entry came from.
struct Provenance {
    int frame_index = -1;
    Rect bbox;
    std::string source;
};

struct OntologyEntry {
    int id = 0;
    ClassLabel label = ClassLabel::Junk;
    CovarianceDescriptor descriptor;
    Provenance provenance;
    std::string note;
};

struct ClassificationResult {
    ClassLabel label = ClassLabel::Junk;
    int nearest_id = -1;
    double distance = 0.0;
    /// Nearest entry of any other class; +inf when the library holds one class.
    double runner_up_distance = 0.0;
    double margin = 0.0;
};

/// Labeled descriptors sharing one feature set and normalization.
class OntologyLibrary {
public:
    static constexpr int kFormatVersion = 1;
    /// Relative distance difference below which two entries tie.
    static constexpr double kTieTolerance = 1e-12;

    explicit OntologyLibrary(FeatureSet fs = FeatureSet::CodeDefault,
                             Normalization norm = Normalization::Population)
        : feature_set_(fs), normalization_(norm) {}

    FeatureSet feature_set() const { return feature_set_; }
    Normalization normalization() const { return normalization_; }
    const std::vector<OntologyEntry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    int add_entry(ClassLabel label, CovarianceDescriptor descriptor, Provenance provenance = {},
                  std::string note = {});

    /// Nearest entry under spd_distance; ties (within kTieTolerance) go to the
    /// lowest id.
    ClassificationResult classify(const CovarianceDescriptor& query, double eps = kDefaultEps) const;

    void save(const std::filesystem::path& path) const;
    std::string to_json() const;
    static OntologyLibrary from_json(const std::string& text);
    static OntologyLibrary load(const std::filesystem::path& path);

    /// Throws unless this library was built with `fs` / `norm`.
    void require_compatible(FeatureSet fs, Normalization norm) const;

private:
    FeatureSet feature_set_;
    Normalization normalization_;
    std::vector<OntologyEntry> entries_;
    int next_id_ = 0;
};

}  // namespace vehcov
