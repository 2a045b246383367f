#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vehcov/config.hpp"
#include "vehcov/evaluation.hpp"
#include "vehcov/frame_store.hpp"
#include "vehcov/ontology.hpp"
#include "vehcov/preprocess.hpp"
#include "vehcov/segmentation.hpp"

namespace vehcov {

/// Dumpable points in the per-frame flow.
enum class Stage { Calibrated, Subtracted, Cleaned, Binary };

std::string to_string(Stage s);
Stage parse_stage(const std::string& name);

/// Everything up to and including binarization.
struct PreparedSequence {
    std::vector<ColorImage> calibrated;  ///< empty when resumed past calibration
    std::vector<GrayImage> subtracted;   ///< empty when resumed past subtraction
    std::vector<GrayImage> cleaned;
    std::vector<BinaryImage> binary;
    double threshold = 0.0;

    size_t size() const { return cleaned.size(); }
};

PreparedSequence prepare(const FrameSequence& raw, const RunConfig& cfg);

/// Writes the state needed to resume from `stage` into `dir`.
void dump_stage(const PreparedSequence& prep, Stage stage, const std::filesystem::path& dir);

/// Rebuilds the prepared sequence from a dump directory and finishes the
/// remaining preprocessing with `cfg`.
PreparedSequence resume_from(const std::filesystem::path& dir, const RunConfig& cfg);

/// Region proposals for every frame.
struct Analysis {
    PreparedSequence prep;
    std::vector<RefineResult> segments;
};

Analysis analyze(PreparedSequence prep, const RunConfig& cfg);

/// Region descriptor over the cleaned frame (whole bounding box).
CovarianceDescriptor describe_region(const Analysis& a, int frame, const Region& region, const RunConfig& cfg);

struct PipelineResult {
    std::vector<Detection> detections;
    std::vector<FrameCounts> per_frame;
    std::vector<std::string> warnings;
    double threshold = 0.0;
};

/// Classifies every proposed region against `lib`.
PipelineResult classify_analysis(const Analysis& a, const OntologyLibrary& lib, const RunConfig& cfg);

struct RunOptions {
    std::optional<Stage> dump_stage;
    std::optional<std::filesystem::path> resume_dir;
};

/// Loads the ontology (before any frame work), then runs every stage.
PipelineResult run_pipeline(const RunConfig& cfg, const RunOptions& opts = {});

/// `detections.jsonl` and `summary.json` under `dir`.
void write_pipeline_outputs(const PipelineResult& result, const std::filesystem::path& dir);

/// One human decision: region `region_id` of `frame` is `label` (empty = Ignore).
struct LabelRow {
    int frame = 0;
    int region_id = 0;
    std::optional<ClassLabel> label;
};

/// CSV `frame_index,region_id,label` with a header row; label may be Ignore.
std::vector<LabelRow> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<LabelRow>& rows);
void append_label(const std::filesystem::path& path, const LabelRow& row);

/// Labels each region of the chosen frames from ground truth: the truth label
/// of its best IoU match, Junk when nothing matches.
std::vector<LabelRow> labels_from_truth(const Analysis& a, const GroundTruth& truth, const std::vector<int>& frames,
                                        double iou_threshold);

/// Describes each labeled region and adds it to a fresh library.
OntologyLibrary build_ontology(const Analysis& a, const std::vector<LabelRow>& labels, const RunConfig& cfg,
                               const std::string& source = {});

}  // namespace vehcov
