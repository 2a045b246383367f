#include "vehcov/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace vehcov {

using nlohmann::json;

std::string to_string(ClassLabel label) {
    switch (label) {
        case ClassLabel::Car: return "Car";
        case ClassLabel::Truck: return "Truck";
        case ClassLabel::Multiple: return "Multiple";
        case ClassLabel::Junk: return "Junk";
    }
    throw Error("unknown class label");
}

std::optional<ClassLabel> try_parse_label(const std::string& name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "car") return ClassLabel::Car;
    if (lower == "truck") return ClassLabel::Truck;
    if (lower == "multiple") return ClassLabel::Multiple;
    if (lower == "junk") return ClassLabel::Junk;
    return std::nullopt;
}

ClassLabel parse_label(const std::string& name) {
    if (auto l = try_parse_label(name)) return *l;
    throw Error("unknown class label '" + name + "'");
}

int OntologyLibrary::add_entry(ClassLabel label, CovarianceDescriptor descriptor, Provenance provenance,
                               std::string note) {
    if (descriptor.feature_set != feature_set_)
        throw Error("descriptor feature set " + to_string(descriptor.feature_set) + " does not match library " +
                    to_string(feature_set_));
    if (descriptor.normalization != normalization_) throw Error("descriptor normalization does not match library");
    const int d = feature_dimension(feature_set_);
    if (descriptor.matrix.rows() != d || descriptor.matrix.cols() != d)
        throw Error("descriptor matrix must be " + std::to_string(d) + "x" + std::to_string(d));
    const int id = next_id_++;
    entries_.push_back({id, label, std::move(descriptor), std::move(provenance), std::move(note)});
    return id;
}

ClassificationResult OntologyLibrary::classify(const CovarianceDescriptor& query, double eps) const {
    if (entries_.empty()) throw Error("cannot classify against an empty ontology library");
    std::vector<double> dist(entries_.size());
    for (size_t i = 0; i < entries_.size(); ++i) dist[i] = spd_distance(query, entries_[i].descriptor, eps);
    // Distances equal up to rounding are ties; the lowest id (earliest entry) wins.
    const double nearest = *std::min_element(dist.begin(), dist.end());
    const double slack = kTieTolerance * std::max(1.0, nearest);
    size_t best = 0;
    while (dist[best] > nearest + slack) ++best;
    ClassificationResult r;
    r.label = entries_[best].label;
    r.nearest_id = entries_[best].id;
    r.distance = dist[best];
    r.runner_up_distance = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].label != r.label) r.runner_up_distance = std::min(r.runner_up_distance, dist[i]);
    r.margin = std::max(0.0, r.runner_up_distance - r.distance);
    return r;
}

void OntologyLibrary::require_compatible(FeatureSet fs, Normalization norm) const {
    if (fs != feature_set_)
        throw Error("ontology was built with feature set " + to_string(feature_set_) + " but the run uses " +
                    to_string(fs));
    if (norm != normalization_)
        throw Error("ontology was built with " + to_string(normalization_) + " covariance but the run uses " +
                    to_string(norm));
}

std::string OntologyLibrary::to_json() const {
    json doc;
    doc["version"] = kFormatVersion;
    doc["feature_set"] = to_string(feature_set_);
    doc["normalization"] = to_string(normalization_);
    doc["entries"] = json::array();
    for (const auto& e : entries_) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < e.descriptor.matrix.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < e.descriptor.matrix.cols(); ++c) row.push_back(e.descriptor.matrix(r, c));
            rows.push_back(std::move(row));
        }
        const Rect& b = e.provenance.bbox;
        doc["entries"].push_back({
            {"id", e.id},
            {"label", to_string(e.label)},
            {"n_pixels", e.descriptor.n_pixels},
            {"matrix", std::move(rows)},
            {"provenance",
             {{"frame", e.provenance.frame_index},
              {"bbox", {{"left", b.left}, {"top", b.top}, {"width", b.width}, {"height", b.height}}},
              {"source", e.provenance.source}}},
            {"note", e.note},
        });
    }
    return doc.dump(2) + "\n";
}

void OntologyLibrary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write ontology " + path.string());
    out << to_json();
    if (!out) throw Error("write failed: " + path.string());
}

OntologyLibrary OntologyLibrary::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("ontology parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    try {
        const int version = doc.at("version").get<int>();
        if (version != kFormatVersion)
            throw Error("ontology format version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kFormatVersion) + ")");
        FeatureSet fs = parse_feature_set(doc.at("feature_set").get<std::string>());
        Normalization norm = doc.contains("normalization")
                                 ? parse_normalization(doc.at("normalization").get<std::string>())
                                 : Normalization::Population;
        OntologyLibrary lib(fs, norm);
        const int d = feature_dimension(fs);
        int last_id = -1;
        for (const auto& e : doc.at("entries")) {
            const int id = e.at("id").get<int>();
            if (id <= last_id) throw Error("ontology entry ids must be unique and increasing");
            last_id = id;
            const auto& rows = e.at("matrix");
            if (static_cast<int>(rows.size()) != d) throw Error("entry " + std::to_string(id) + ": wrong matrix size");
            CovarianceDescriptor desc;
            desc.feature_set = fs;
            desc.normalization = norm;
            desc.n_pixels = e.value("n_pixels", 0L);
            desc.matrix.resize(d, d);
            for (int r = 0; r < d; ++r) {
                if (static_cast<int>(rows[r].size()) != d)
                    throw Error("entry " + std::to_string(id) + ": wrong matrix size");
                for (int c = 0; c < d; ++c) desc.matrix(r, c) = rows[r][c].get<double>();
            }
            OntologyEntry entry{id, parse_label(e.at("label").get<std::string>()), std::move(desc), {}, e.value("note", "")};
            if (e.contains("provenance")) {
                const auto& p = e.at("provenance");
                entry.provenance.frame_index = p.value("frame", -1);
                entry.provenance.source = p.value("source", "");
                if (p.contains("bbox")) {
                    const auto& b = p.at("bbox");
                    entry.provenance.bbox = {b.at("left").get<int>(), b.at("top").get<int>(), b.at("width").get<int>(),
                                             b.at("height").get<int>()};
                }
            }
            lib.entries_.push_back(std::move(entry));
        }
        lib.next_id_ = last_id + 1;
        return lib;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed ontology: ") + e.what());
    }
}

OntologyLibrary OntologyLibrary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open ontology " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace vehcov
