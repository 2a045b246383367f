#include "vehcov/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "vehcov/calibration.hpp"

namespace vehcov {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string to_string(Stage s) {
    switch (s) {
        case Stage::Calibrated: return "calibrated";
        case Stage::Subtracted: return "subtracted";
        case Stage::Cleaned: return "cleaned";
        case Stage::Binary: return "binary";
    }
    throw Error("unknown stage");
}

Stage parse_stage(const std::string& name) {
    for (auto s : {Stage::Calibrated, Stage::Subtracted, Stage::Cleaned, Stage::Binary})
        if (to_string(s) == name) return s;
    throw Error("unknown stage '" + name + "' (calibrated, subtracted, cleaned, binary)");
}

namespace {

// Runs fn(i) for i in [0, n) on a small thread pool. The exception from the
// lowest failing index is rethrown, so failures are reported deterministically.
template <typename Fn>
void parallel_for(size_t n, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    size_t threads = std::min<size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

template <typename Fn>
auto at_stage(size_t frame, const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw Error("frame " + std::to_string(frame) + ", stage " + stage + ": " + e.what());
    }
}

std::string numbered(const std::string& prefix, size_t i, const std::string& ext) {
    std::ostringstream os;
    os << prefix << '_' << std::setw(4) << std::setfill('0') << i << ext;
    return os.str();
}

void finish_from_cleaned(PreparedSequence& prep, const RunConfig& cfg) {
    BinarizeResult b = binarize_sequence(prep.cleaned, cfg.clean);
    prep.binary = std::move(b.masks);
    prep.threshold = b.threshold;
    // mu == 0 means every pixel of every frame matched the background; ">= 0"
    // would then mark whole frames as foreground.
    if (!cfg.clean.binary_threshold_override && b.threshold == 0.0)
        for (auto& m : prep.binary) std::fill(m.pixels.begin(), m.pixels.end(), 0);
}

void finish_from_subtracted(PreparedSequence& prep, const RunConfig& cfg) {
    prep.cleaned.resize(prep.subtracted.size());
    parallel_for(prep.subtracted.size(), [&](size_t i) {
        prep.cleaned[i] = at_stage(i, "clean", [&] { return clean(prep.subtracted[i], cfg.clean); });
    });
    finish_from_cleaned(prep, cfg);
}

void finish_from_calibrated(PreparedSequence& prep, const RunConfig& cfg) {
    BackgroundModel bg = mean_background(std::span<const ColorImage>(prep.calibrated));
    prep.subtracted.resize(prep.calibrated.size());
    parallel_for(prep.calibrated.size(), [&](size_t i) {
        prep.subtracted[i] = at_stage(i, "subtract", [&] { return subtract_gray(prep.calibrated[i], bg); });
    });
    finish_from_subtracted(prep, cfg);
}

}  // namespace

PreparedSequence prepare(const FrameSequence& raw, const RunConfig& cfg) {
    cfg.validate();
    if (raw.size() == 0) throw Error("empty frame sequence");
    PreparedSequence prep;
    prep.calibrated.resize(raw.size());
    parallel_for(raw.size(), [&](size_t i) {
        prep.calibrated[i] = at_stage(i, "calibrate", [&] { return rotate_and_crop(raw.frames[i], cfg.calibration); });
    });
    finish_from_calibrated(prep, cfg);
    return prep;
}

void dump_stage(const PreparedSequence& prep, Stage stage, const fs::path& dir) {
    fs::create_directories(dir);
    const size_t n = prep.size();
    auto require = [&](bool ok) {
        if (!ok) throw Error("stage '" + to_string(stage) + "' is not available in this run (it was resumed past it)");
    };
    switch (stage) {
        case Stage::Calibrated:
            require(prep.calibrated.size() == n);
            for (size_t i = 0; i < n; ++i) {
                write_f64(dir / numbered("calibrated", i, ".f64"), prep.calibrated[i]);
                write_ppm(dir / numbered("calibrated", i, ".ppm"), prep.calibrated[i]);
            }
            break;
        case Stage::Subtracted:
            require(prep.subtracted.size() == n);
            for (size_t i = 0; i < n; ++i) {
                write_f64(dir / numbered("subtracted", i, ".f64"), prep.subtracted[i]);
                write_pgm(dir / numbered("subtracted", i, ".pgm"), prep.subtracted[i]);
            }
            break;
        case Stage::Cleaned:
        case Stage::Binary:
            for (size_t i = 0; i < n; ++i) {
                write_f64(dir / numbered("cleaned", i, ".f64"), prep.cleaned[i]);
                write_pgm(dir / numbered("cleaned", i, ".pgm"), prep.cleaned[i]);
                if (stage == Stage::Binary) write_file_bytes(dir / numbered("binary", i, ".pgm"), encode_pgm(prep.binary[i]));
            }
            break;
    }
    ojson meta = {{"stage", to_string(stage)}, {"frames", n}, {"threshold", prep.threshold}};
    std::ofstream(dir / "stage.json") << meta.dump(2) << "\n";
}

PreparedSequence resume_from(const fs::path& dir, const RunConfig& cfg) {
    cfg.validate();
    std::ifstream in(dir / "stage.json");
    if (!in) throw Error("no stage.json in " + dir.string());
    ojson meta;
    try {
        meta = ojson::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed stage.json: " + std::string(e.what()));
    }
    const Stage stage = parse_stage(meta.at("stage").get<std::string>());
    const size_t n = meta.at("frames").get<size_t>();
    if (n == 0) throw Error("stage dump holds no frames");

    PreparedSequence prep;
    switch (stage) {
        case Stage::Calibrated:
            for (size_t i = 0; i < n; ++i) prep.calibrated.push_back(read_f64_color(dir / numbered("calibrated", i, ".f64")));
            finish_from_calibrated(prep, cfg);
            break;
        case Stage::Subtracted:
            for (size_t i = 0; i < n; ++i) prep.subtracted.push_back(read_f64_gray(dir / numbered("subtracted", i, ".f64")));
            finish_from_subtracted(prep, cfg);
            break;
        case Stage::Cleaned:
            for (size_t i = 0; i < n; ++i) prep.cleaned.push_back(read_f64_gray(dir / numbered("cleaned", i, ".f64")));
            finish_from_cleaned(prep, cfg);
            break;
        case Stage::Binary:
            for (size_t i = 0; i < n; ++i) {
                prep.cleaned.push_back(read_f64_gray(dir / numbered("cleaned", i, ".f64")));
                auto bytes = read_file_bytes(dir / numbered("binary", i, ".pgm"));
                prep.binary.push_back(decode_binary_pgm(bytes, numbered("binary", i, ".pgm")));
            }
            prep.threshold = meta.at("threshold").get<double>();
            break;
    }
    return prep;
}

Analysis analyze(PreparedSequence prep, const RunConfig& cfg) {
    Analysis a;
    a.prep = std::move(prep);
    a.segments.resize(a.prep.size());
    parallel_for(a.prep.size(), [&](size_t i) {
        a.segments[i] = at_stage(i, "segment", [&] {
            return segment_frame(a.prep.binary[i], cfg.segmentation, cfg.seed + i, static_cast<int>(i));
        });
    });
    return a;
}

CovarianceDescriptor describe_region(const Analysis& a, int frame, const Region& region, const RunConfig& cfg) {
    if (frame < 0 || static_cast<size_t>(frame) >= a.prep.size()) throw Error("frame index out of range");
    return describe(crop(a.prep.cleaned[frame], region.bbox), cfg.feature_set, cfg.normalization());
}

PipelineResult classify_analysis(const Analysis& a, const OntologyLibrary& lib, const RunConfig& cfg) {
    lib.require_compatible(cfg.feature_set, cfg.normalization());
    const size_t n = a.prep.size();
    std::vector<std::vector<Detection>> per_frame(n);
    std::vector<std::vector<std::string>> notes(n);
    parallel_for(n, [&](size_t f) {
        at_stage(f, "classify", [&] {
            const auto& seg = a.segments[f];
            if (seg.hit_iteration_cap)
                notes[f].push_back("frame " + std::to_string(f) + ": refinement stopped at the pass limit");
            for (size_t r = 0; r < seg.regions.size(); ++r) {
                const Region& region = seg.regions[r];
                if (region.bbox.width < 3 || region.bbox.height < 3) {
                    notes[f].push_back("frame " + std::to_string(f) + ": region " + std::to_string(r) +
                                       " is thinner than 3 px and was skipped");
                    continue;
                }
                auto desc = describe_region(a, static_cast<int>(f), region, cfg);
                auto c = lib.classify(desc, cfg.eps);
                per_frame[f].push_back({static_cast<int>(f), region.bbox, c.label, c.distance, c.margin});
            }
            return 0;
        });
    });

    PipelineResult result;
    result.threshold = a.prep.threshold;
    result.per_frame.resize(n);
    for (size_t f = 0; f < n; ++f) {
        for (const auto& d : per_frame[f]) {
            if (d.label == ClassLabel::Car) ++result.per_frame[f].cars;
            if (d.label == ClassLabel::Truck) ++result.per_frame[f].trucks;
            result.detections.push_back(d);
        }
        result.warnings.insert(result.warnings.end(), notes[f].begin(), notes[f].end());
    }
    return result;
}

PipelineResult run_pipeline(const RunConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    if (cfg.ontology.empty()) throw Error("no ontology configured ([ontology] path)");
    if (!fs::exists(cfg.ontology)) throw Error("ontology file not found: " + cfg.ontology.string());
    OntologyLibrary lib = OntologyLibrary::load(cfg.ontology);
    lib.require_compatible(cfg.feature_set, cfg.normalization());
    if (lib.empty()) throw Error("ontology " + cfg.ontology.string() + " has no entries");

    PreparedSequence prep;
    if (opts.resume_dir) {
        prep = resume_from(*opts.resume_dir, cfg);
    } else {
        if (cfg.input.empty()) throw Error("no input configured ([input] path)");
        prep = prepare(load_sequence(cfg.input), cfg);
    }
    if (opts.dump_stage) dump_stage(prep, *opts.dump_stage, cfg.output_dir / "stages" / to_string(*opts.dump_stage));
    return classify_analysis(analyze(std::move(prep), cfg), lib, cfg);
}

void write_pipeline_outputs(const PipelineResult& result, const fs::path& dir) {
    fs::create_directories(dir);
    write_detections(dir / "detections.jsonl", result.detections);
    ojson summary;
    summary["frames"] = result.per_frame.size();
    summary["threshold"] = result.threshold;
    summary["detections"] = result.detections.size();
    ojson frames = ojson::array();
    for (size_t f = 0; f < result.per_frame.size(); ++f)
        frames.push_back({{"frame", f}, {"cars", result.per_frame[f].cars}, {"trucks", result.per_frame[f].trucks}});
    summary["per_frame"] = std::move(frames);
    summary["warnings"] = result.warnings;
    std::ofstream out(dir / "summary.json", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "summary.json").string());
    out << summary.dump(2) << "\n";
}

std::vector<LabelRow> read_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open labels " + path.string());
    std::vector<LabelRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#' || line.rfind("frame", 0) == 0) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
            throw Error(path.filename().string() + ":" + std::to_string(line_no) + ": expected frame_index,region_id,label");
        LabelRow row;
        try {
            row.frame = std::stoi(a);
            row.region_id = std::stoi(b);
        } catch (const std::logic_error&) {
            throw Error(path.filename().string() + ":" + std::to_string(line_no) + ": bad index");
        }
        if (c != "Ignore" && c != "ignore") row.label = parse_label(c);
        rows.push_back(row);
    }
    return rows;
}

namespace {
std::string label_line(const LabelRow& r) {
    return std::to_string(r.frame) + "," + std::to_string(r.region_id) + "," +
           (r.label ? to_string(*r.label) : std::string("Ignore")) + "\n";
}
constexpr const char* kLabelHeader = "frame_index,region_id,label\n";
}  // namespace

void write_labels(const fs::path& path, const std::vector<LabelRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write labels " + path.string());
    out << kLabelHeader;
    for (const auto& r : rows) out << label_line(r);
}

void append_label(const fs::path& path, const LabelRow& row) {
    bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to labels " + path.string());
    if (fresh) out << kLabelHeader;
    out << label_line(row);
}

std::vector<LabelRow> labels_from_truth(const Analysis& a, const GroundTruth& truth, const std::vector<int>& frames,
                                        double iou_threshold) {
    std::vector<LabelRow> rows;
    for (int f : frames) {
        if (f < 0 || static_cast<size_t>(f) >= a.segments.size() || static_cast<size_t>(f) >= truth.n_frames())
            throw Error("label frame " + std::to_string(f) + " out of range");
        const auto& regions = a.segments[f].regions;
        std::vector<Rect> det, gt;
        for (const auto& r : regions) det.push_back(r.bbox);
        for (const auto& t : truth.frames[f]) gt.push_back(t.bbox);
        FrameMatch m = match_frame(det, gt, iou_threshold);
        std::vector<std::optional<ClassLabel>> label(regions.size(), ClassLabel::Junk);
        for (const auto& p : m.pairs) label[p.detection] = truth.frames[f][p.truth].label;
        for (size_t r = 0; r < regions.size(); ++r) rows.push_back({f, static_cast<int>(r), label[r]});
    }
    return rows;
}

OntologyLibrary build_ontology(const Analysis& a, const std::vector<LabelRow>& labels, const RunConfig& cfg,
                               const std::string& source) {
    OntologyLibrary lib(cfg.feature_set, cfg.normalization());
    for (const auto& row : labels) {
        if (!row.label) continue;
        if (row.frame < 0 || static_cast<size_t>(row.frame) >= a.segments.size())
            throw Error("label references frame " + std::to_string(row.frame) + " outside the sequence");
        const auto& regions = a.segments[row.frame].regions;
        if (row.region_id < 0 || static_cast<size_t>(row.region_id) >= regions.size())
            throw Error("label references region " + std::to_string(row.region_id) + " of frame " +
                        std::to_string(row.frame) + ", which has " + std::to_string(regions.size()) + " regions");
        const Region& region = regions[row.region_id];
        if (region.bbox.width < 3 || region.bbox.height < 3) continue;
        lib.add_entry(*row.label, describe_region(a, row.frame, region, cfg), Provenance{row.frame, region.bbox, source});
    }
    return lib;
}

}  // namespace vehcov
