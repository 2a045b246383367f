#include "vehcov/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace vehcov {

using ojson = nlohmann::ordered_json;

void GroundTruth::validate(int width, int height) const {
    const Rect frame{0, 0, width, height};
    for (size_t f = 0; f < frames.size(); ++f)
        for (const auto& t : frames[f])
            if (t.bbox.width <= 0 || t.bbox.height <= 0 || !frame.contains(t.bbox))
                throw Error("ground-truth box in frame " + std::to_string(f) + " lies outside the frame");
}

long intersection_area(const Rect& a, const Rect& b) {
    long w = std::min(a.right(), b.right()) - std::max(a.left, b.left);
    long h = std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top);
    return (w > 0 && h > 0) ? w * h : 0;
}

double iou(const Rect& a, const Rect& b) {
    long inter = intersection_area(a, b);
    long uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

FrameMatch match_frame(const std::vector<Rect>& detections, const std::vector<Rect>& truth, double iou_threshold) {
    std::vector<FrameMatch::Pair> candidates;
    for (int d = 0; d < static_cast<int>(detections.size()); ++d)
        for (int t = 0; t < static_cast<int>(truth.size()); ++t) {
            double v = iou(detections[d], truth[t]);
            if (v >= iou_threshold && v > 0.0) candidates.push_back({d, t, v});
        }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.iou > b.iou; });

    FrameMatch m;
    std::vector<bool> det_used(detections.size()), truth_used(truth.size());
    for (const auto& c : candidates) {
        if (det_used[c.detection] || truth_used[c.truth]) continue;
        det_used[c.detection] = truth_used[c.truth] = true;
        m.pairs.push_back(c);
    }
    for (int d = 0; d < static_cast<int>(detections.size()); ++d)
        if (!det_used[d]) m.unmatched_detections.push_back(d);
    for (int t = 0; t < static_cast<int>(truth.size()); ++t)
        if (!truth_used[t]) m.unmatched_truth.push_back(t);
    return m;
}

std::vector<FrameMatch> match_detections(const std::vector<std::vector<Detection>>& detections,
                                         const GroundTruth& truth, double iou_threshold) {
    if (detections.size() != truth.frames.size())
        throw Error("detections cover " + std::to_string(detections.size()) + " frames but ground truth covers " +
                    std::to_string(truth.frames.size()));
    std::vector<FrameMatch> out;
    out.reserve(detections.size());
    for (size_t f = 0; f < detections.size(); ++f) {
        std::vector<Rect> d, t;
        for (const auto& x : detections[f]) d.push_back(x.bbox);
        for (const auto& x : truth.frames[f]) t.push_back(x.bbox);
        out.push_back(match_frame(d, t, iou_threshold));
    }
    return out;
}

std::optional<double> sensitivity(long correct, long total) {
    if (total <= 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(total);
}

std::optional<double> specificity(long correct_junk, long junk_as_class) {
    long denom = junk_as_class + correct_junk;
    if (denom <= 0) return std::nullopt;
    return static_cast<double>(correct_junk) / static_cast<double>(denom);
}

EvaluationReport evaluate(const std::vector<Detection>& detections, const GroundTruth& truth, double iou_threshold) {
    std::vector<std::vector<Detection>> per_frame(truth.n_frames());
    for (const auto& d : detections) {
        if (d.frame < 0 || static_cast<size_t>(d.frame) >= per_frame.size())
            throw Error("detection references frame " + std::to_string(d.frame) + " outside the ground truth");
        per_frame[d.frame].push_back(d);
    }
    auto matches = match_detections(per_frame, truth, iou_threshold);

    EvaluationReport rep;
    rep.per_frame.resize(per_frame.size());
    auto stats_for = [&](ClassLabel l) -> ClassStats* {
        if (l == ClassLabel::Car) return &rep.car;
        if (l == ClassLabel::Truck) return &rep.truck;
        return nullptr;
    };

    for (size_t f = 0; f < per_frame.size(); ++f) {
        const auto& dets = per_frame[f];
        const auto& boxes = truth.frames[f];
        const auto& m = matches[f];
        std::vector<int> truth_of(dets.size(), -1);
        for (const auto& p : m.pairs) truth_of[p.detection] = p.truth;

        rep.detections += static_cast<long>(dets.size());
        rep.matched += static_cast<long>(m.pairs.size());
        rep.unmatched += static_cast<long>(m.unmatched_detections.size());

        for (const auto& t : boxes)
            if (auto* s = stats_for(t.label)) ++s->total;
        for (const auto& p : m.pairs) {
            const auto& t = boxes[p.truth];
            if (auto* s = stats_for(t.label); s && dets[p.detection].label == t.label) ++s->correctly_identified;
        }

        for (size_t i = 0; i < dets.size(); ++i) {
            const auto& d = dets[i];
            if (d.label == ClassLabel::Car) ++rep.per_frame[f].cars;
            if (d.label == ClassLabel::Truck) ++rep.per_frame[f].trucks;
            if (d.label == ClassLabel::Multiple) continue;
            const bool junk_region = truth_of[i] < 0 || boxes[truth_of[i]].label == ClassLabel::Junk;
            if (!junk_region) continue;
            if (auto* s = stats_for(d.label)) {
                ++s->junk_as_class;
                continue;
            }
            // Junk labeled as junk: credit the class it was carved from.
            long best_overlap = 0;
            ClassStats* credited = nullptr;
            for (const auto& t : boxes) {
                auto* s = stats_for(t.label);
                long a = s ? intersection_area(d.bbox, t.bbox) : 0;
                if (a > best_overlap) {
                    best_overlap = a;
                    credited = s;
                }
            }
            if (credited) {
                ++credited->correct_junk;
            } else {
                ++rep.car.correct_junk;
                ++rep.truck.correct_junk;
            }
        }
    }
    return rep;
}

namespace {

std::string percent(const std::optional<double>& v) {
    if (!v) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << (*v * 100.0) << "%";
    return os.str();
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson stats_json(const ClassStats& s) {
    return {{"total", s.total},
            {"correctly_identified", s.correctly_identified},
            {"junk_as_class", s.junk_as_class},
            {"correct_junk", s.correct_junk},
            {"sensitivity", optional_json(s.sensitivity())},
            {"specificity", optional_json(s.specificity())}};
}

}  // namespace

std::string EvaluationReport::to_table() const {
    std::ostringstream os;
    os << std::left << std::setw(8) << "class" << std::setw(8) << "total" << std::setw(10) << "correct" << std::setw(12)
       << "junk-as" << std::setw(14) << "correct-junk" << std::setw(13) << "sensitivity" << "specificity\n";
    for (auto [name, s] : {std::pair{"Car", &car}, std::pair{"Truck", &truck}}) {
        os << std::left << std::setw(8) << name << std::setw(8) << s->total << std::setw(10) << s->correctly_identified
           << std::setw(12) << s->junk_as_class << std::setw(14) << s->correct_junk << std::setw(13)
           << percent(s->sensitivity()) << percent(s->specificity()) << "\n";
    }
    os << "frames: " << per_frame.size() << "  detections: " << detections << "  matched: " << matched
       << "  unmatched: " << unmatched << "\n";
    return os.str();
}

std::string EvaluationReport::to_json() const {
    ojson doc;
    doc["car"] = stats_json(car);
    doc["truck"] = stats_json(truck);
    doc["detections"] = detections;
    doc["matched"] = matched;
    doc["unmatched"] = unmatched;
    ojson frames = ojson::array();
    for (size_t f = 0; f < per_frame.size(); ++f)
        frames.push_back({{"frame", f}, {"cars", per_frame[f].cars}, {"trucks", per_frame[f].trucks}});
    doc["per_frame"] = std::move(frames);
    return doc.dump(2) + "\n";
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open ground truth " + path.string());
    GroundTruth gt;
    long declared = -1;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("frames=");
            if (pos != std::string::npos) declared = std::stol(line.substr(pos + 7));
            continue;
        }
        if (!header_seen && line.rfind("frame", 0) == 0) {
            header_seen = true;
            continue;
        }
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(cell);
        if (cols.size() != 6)
            throw Error(path.filename().string() + ":" + std::to_string(line_no) + ": expected 6 columns");
        try {
            int frame = std::stoi(cols[0]);
            if (frame < 0) throw Error("negative frame index");
            Rect r{std::stoi(cols[1]), std::stoi(cols[2]), std::stoi(cols[3]), std::stoi(cols[4])};
            if (static_cast<size_t>(frame) >= gt.frames.size()) gt.frames.resize(frame + 1);
            gt.frames[frame].push_back({r, parse_label(cols[5])});
        } catch (const std::logic_error& e) {
            throw Error(path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (declared >= 0) {
        if (static_cast<size_t>(declared) < gt.frames.size())
            throw Error(path.filename().string() + ": rows reference frames beyond frames=" + std::to_string(declared));
        gt.frames.resize(static_cast<size_t>(declared));
    }
    return gt;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write ground truth " + path.string());
    out << "# frames=" << truth.n_frames() << "\n";
    out << "frame,left,top,width,height,label\n";
    for (size_t f = 0; f < truth.frames.size(); ++f)
        for (const auto& t : truth.frames[f])
            out << f << ',' << t.bbox.left << ',' << t.bbox.top << ',' << t.bbox.width << ',' << t.bbox.height << ','
                << to_string(t.label) << '\n';
}

std::string detection_to_json(const Detection& d) {
    ojson j;
    j["frame"] = d.frame;
    j["bbox"] = {{"left", d.bbox.left}, {"top", d.bbox.top}, {"width", d.bbox.width}, {"height", d.bbox.height}};
    j["label"] = to_string(d.label);
    j["distance"] = d.distance;
    j["margin"] = std::isfinite(d.margin) ? ojson(d.margin) : ojson(nullptr);
    return j.dump();
}

void write_detections(const std::filesystem::path& path, const std::vector<Detection>& detections) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write detections " + path.string());
    for (const auto& d : detections) out << detection_to_json(d) << '\n';
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open detections " + path.string());
    std::vector<Detection> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = ojson::parse(line);
            Detection d;
            d.frame = j.at("frame").get<int>();
            const auto& b = j.at("bbox");
            d.bbox = {b.at("left").get<int>(), b.at("top").get<int>(), b.at("width").get<int>(),
                      b.at("height").get<int>()};
            d.label = parse_label(j.at("label").get<std::string>());
            d.distance = j.value("distance", 0.0);
            d.margin = (j.contains("margin") && !j.at("margin").is_null()) ? j.at("margin").get<double>()
                                                                           : std::numeric_limits<double>::infinity();
            out.push_back(d);
        } catch (const nlohmann::json::exception& e) {
            throw Error(path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace vehcov
