#include "vehcov/config.hpp"

#include <charconv>
#include <functional>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace vehcov {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) out.push_back(trim(part));
    return out;
}

}  // namespace

std::optional<std::string> ConfigSection::get(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    return std::nullopt;
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source) {
    ConfigFile cfg;
    cfg.source = source;
    cfg.sections.push_back({"", 0, {}});
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (auto hash = line.find(" #"); hash != std::string::npos) line = trim(line.substr(0, hash));
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(source + ":" + std::to_string(line_no) + ": malformed section header");
            cfg.sections.push_back({trim(line.substr(1, line.size() - 2)), line_no, {}});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(source + ":" + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw Error(source + ":" + std::to_string(line_no) + ": empty key");
        auto& sec = cfg.sections.back();
        if (sec.get(key))
            throw Error(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        sec.entries.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return cfg;
}

ConfigFile ConfigFile::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::vector<const ConfigSection*> ConfigFile::all(const std::string& name) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections)
        if (s.name == name) out.push_back(&s);
    return out;
}

const ConfigSection* ConfigFile::find(const std::string& name) const {
    auto v = all(name);
    if (v.size() > 1) throw Error(source + ": section [" + name + "] appears more than once");
    return v.empty() ? nullptr : v.front();
}

double parse_real(const std::string& key, const std::string& value) {
    double v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size())
        throw Error("key '" + key + "': expected a real number, got '" + value + "'");
    return v;
}

long parse_integer(const std::string& key, const std::string& value) {
    long v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size())
        throw Error("key '" + key + "': expected an integer, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw Error("key '" + key + "': expected true/false, got '" + value + "'");
}

Rect parse_rect(const std::string& key, const std::string& value) {
    auto parts = split(value, ',');
    if (parts.size() != 4) throw Error("key '" + key + "': expected <left>,<top>,<width>,<height>");
    return {static_cast<int>(parse_integer(key, parts[0])), static_cast<int>(parse_integer(key, parts[1])),
            static_cast<int>(parse_integer(key, parts[2])), static_cast<int>(parse_integer(key, parts[3]))};
}

Point parse_point(const std::string& key, const std::string& value) {
    auto parts = split(value, ',');
    if (parts.size() != 2) throw Error("key '" + key + "': expected <x>,<y>");
    return {parse_real(key, parts[0]), parse_real(key, parts[1])};
}

std::string format_real(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

void RunConfig::validate() const {
    calibration.validate();
    clean.validate();
    segmentation.validate();
    if (!(eps >= 0.0)) throw Error("eps must be >= 0");
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw Error("iou_threshold must lie in (0, 1]");
}

RunConfig RunConfig::parse(const std::string& text, const fs::path& base_dir, const std::string& source) {
    ConfigFile file = ConfigFile::parse(text, source);
    RunConfig cfg;
    auto resolve = [&](const std::string& p) -> fs::path {
        fs::path path(p);
        return (path.is_relative() && !base_dir.empty()) ? base_dir / path : path;
    };

    using Setter = std::function<void(const std::string& key, const std::string& value)>;
    const std::map<std::string, std::map<std::string, Setter>> schema = {
        {"input", {{"path", [&](auto&, auto& v) { cfg.input = resolve(v); }}}},
        {"calibration",
         {{"angle_deg", [&](auto& k, auto& v) { cfg.calibration.angle_degrees = parse_real(k, v); }},
          {"crop", [&](auto& k, auto& v) {
               if (v.empty() || v == "full")
                   cfg.calibration.crop.reset();
               else
                   cfg.calibration.crop = parse_rect(k, v);
           }}}},
        {"clean",
         {{"floor", [&](auto& k, auto& v) { cfg.clean.floor = parse_real(k, v); }},
          {"median_window", [&](auto& k, auto& v) { cfg.clean.median_window = static_cast<int>(parse_integer(k, v)); }},
          {"edge_gain", [&](auto& k, auto& v) { cfg.clean.edge_gain = parse_real(k, v); }},
          {"canny_high", [&](auto& k, auto& v) { cfg.clean.canny_high = parse_real(k, v); }},
          {"binary_threshold", [&](auto& k, auto& v) {
               if (v.empty() || v == "mean")
                   cfg.clean.binary_threshold_override.reset();
               else
                   cfg.clean.binary_threshold_override = parse_real(k, v);
           }}}},
        {"segmentation",
         {{"min_component_px", [&](auto& k, auto& v) { cfg.segmentation.min_component_px = parse_integer(k, v); }},
          {"split_fill_max", [&](auto& k, auto& v) { cfg.segmentation.split_fill_max = parse_real(k, v); }},
          {"split_area_min", [&](auto& k, auto& v) { cfg.segmentation.split_area_min = parse_integer(k, v); }},
          {"regroup_fill_min", [&](auto& k, auto& v) { cfg.segmentation.regroup_fill_min = parse_real(k, v); }},
          {"regroup_area_max", [&](auto& k, auto& v) { cfg.segmentation.regroup_area_max = parse_integer(k, v); }},
          {"delete_area_max", [&](auto& k, auto& v) { cfg.segmentation.delete_area_max = parse_integer(k, v); }},
          {"connectivity", [&](auto& k, auto& v) { cfg.segmentation.connectivity = static_cast<int>(parse_integer(k, v)); }},
          {"max_refine_iterations",
           [&](auto& k, auto& v) { cfg.segmentation.max_refine_iterations = static_cast<int>(parse_integer(k, v)); }}}},
        {"descriptor",
         {{"feature_set", [&](auto&, auto& v) { cfg.feature_set = parse_feature_set(v); }},
          {"eps", [&](auto& k, auto& v) { cfg.eps = parse_real(k, v); }},
          {"sample_covariance", [&](auto& k, auto& v) { cfg.sample_covariance = parse_bool(k, v); }}}},
        {"ontology",
         {{"path", [&](auto&, auto& v) { cfg.ontology = v.empty() ? fs::path() : resolve(v); }},
          {"labels", [&](auto&, auto& v) { cfg.labels = v.empty() ? fs::path() : resolve(v); }}}},
        {"output", {{"dir", [&](auto&, auto& v) { cfg.output_dir = resolve(v); }}}},
        {"evaluation", {{"iou_threshold", [&](auto& k, auto& v) { cfg.iou_threshold = parse_real(k, v); }}}},
        {"run", {{"seed", [&](auto& k, auto& v) {
                      long s = parse_integer(k, v);
                      if (s < 0) throw Error("seed must be non-negative");
                      cfg.seed = static_cast<std::uint64_t>(s);
                  }}}},
    };

    std::set<std::string> seen;
    for (const auto& sec : file.sections) {
        if (sec.name.empty() && sec.entries.empty()) continue;
        auto it = schema.find(sec.name);
        if (it == schema.end()) throw Error(source + ":" + std::to_string(sec.line) + ": unknown section [" + sec.name + "]");
        if (!seen.insert(sec.name).second) throw Error(source + ": section [" + sec.name + "] appears more than once");
        for (const auto& [k, v] : sec.entries) {
            auto setter = it->second.find(k);
            if (setter == it->second.end()) throw Error(source + ": unknown key '" + k + "' in [" + sec.name + "]");
            setter->second(k, v);
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.parent_path(), path.string());
}

std::string RunConfig::to_text() const {
    std::ostringstream os;
    os << "[input]\npath=" << input.string() << "\n\n";
    os << "[calibration]\nangle_deg=" << format_real(calibration.angle_degrees) << "\n";
    if (calibration.crop) {
        const Rect& c = *calibration.crop;
        os << "crop=" << c.left << ',' << c.top << ',' << c.width << ',' << c.height << "\n";
    } else {
        os << "crop=full\n";
    }
    os << "\n[clean]\nfloor=" << format_real(clean.floor) << "\nmedian_window=" << clean.median_window
       << "\nedge_gain=" << format_real(clean.edge_gain) << "\ncanny_high=" << format_real(clean.canny_high)
       << "\nbinary_threshold="
       << (clean.binary_threshold_override ? format_real(*clean.binary_threshold_override) : std::string("mean")) << "\n";
    const auto& s = segmentation;
    os << "\n[segmentation]\nmin_component_px=" << s.min_component_px << "\nsplit_fill_max=" << format_real(s.split_fill_max)
       << "\nsplit_area_min=" << s.split_area_min << "\nregroup_fill_min=" << format_real(s.regroup_fill_min)
       << "\nregroup_area_max=" << s.regroup_area_max << "\ndelete_area_max=" << s.delete_area_max
       << "\nconnectivity=" << s.connectivity << "\nmax_refine_iterations=" << s.max_refine_iterations << "\n";
    os << "\n[descriptor]\nfeature_set=" << to_string(feature_set) << "\neps=" << format_real(eps)
       << "\nsample_covariance=" << (sample_covariance ? "true" : "false") << "\n";
    os << "\n[ontology]\npath=" << ontology.string() << "\nlabels=" << labels.string() << "\n";
    os << "\n[output]\ndir=" << output_dir.string() << "\n";
    os << "\n[evaluation]\niou_threshold=" << format_real(iou_threshold) << "\n";
    os << "\n[run]\nseed=" << seed << "\n";
    return os.str();
}

}  // namespace vehcov
