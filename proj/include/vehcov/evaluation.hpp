#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vehcov/image.hpp"
#include "vehcov/ontology.hpp"

namespace vehcov {

/// One classified region as emitted by the pipeline.
struct Detection {
    int frame = 0;
    Rect bbox;
    ClassLabel label = ClassLabel::Junk;
    double distance = 0.0;
    double margin = 0.0;  ///< +inf when the library holds a single class
};

struct TruthBox {
    Rect bbox;
    ClassLabel label = ClassLabel::Junk;
};

/// Human (or generator) annotations, one list per frame.
struct GroundTruth {
    std::vector<std::vector<TruthBox>> frames;

    size_t n_frames() const { return frames.size(); }
    /// Throws if any box leaves a width x height frame.
    void validate(int width, int height) const;
};

double iou(const Rect& a, const Rect& b);
long intersection_area(const Rect& a, const Rect& b);

struct FrameMatch {
    struct Pair {
        int detection = 0;
        int truth = 0;
        double iou = 0.0;
    };
    std::vector<Pair> pairs;
    std::vector<int> unmatched_detections;
    std::vector<int> unmatched_truth;
};

/// Greedy best-IoU matching: pairs with IoU >= threshold are taken in
/// descending IoU order (ties by detection then truth index), each box at most once.
FrameMatch match_frame(const std::vector<Rect>& detections, const std::vector<Rect>& truth, double iou_threshold);

std::vector<FrameMatch> match_detections(const std::vector<std::vector<Detection>>& detections,
                                         const GroundTruth& truth, double iou_threshold = 0.5);

/// correct / total; empty when total is 0.
std::optional<double> sensitivity(long correct, long total);
/// correct_junk / (junk_as_class + correct_junk); empty when that is 0.
std::optional<double> specificity(long correct_junk, long junk_as_class);

struct ClassStats {
    long total = 0;
    long correctly_identified = 0;
    long junk_as_class = 0;
    long correct_junk = 0;

    std::optional<double> sensitivity() const { return vehcov::sensitivity(correctly_identified, total); }
    std::optional<double> specificity() const { return vehcov::specificity(correct_junk, junk_as_class); }
};

struct FrameCounts {
    int cars = 0;
    int trucks = 0;
};

struct EvaluationReport {
    ClassStats car;
    ClassStats truck;
    std::vector<FrameCounts> per_frame;
    long detections = 0;
    long matched = 0;
    long unmatched = 0;

    std::string to_table() const;
    std::string to_json() const;
};

/// Scores detections against truth. A detection is a junk region when it is
/// unmatched or matched to a Junk box. Junk regions labeled Car/Truck count
/// against that class; junk regions labeled Junk count as correct junk for the
/// class of the Car/Truck box they overlap most (both classes when they overlap
/// none). Multiple-labeled detections are left out of both ratios.
EvaluationReport evaluate(const std::vector<Detection>& detections, const GroundTruth& truth,
                          double iou_threshold = 0.5);

/// CSV `frame,left,top,width,height,label` with a header row. A `# frames=N`
/// comment fixes the frame count; otherwise it is the last frame index + 1.
GroundTruth read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);

/// JSON lines, one detection per line; margin is null when infinite.
std::string detection_to_json(const Detection& d);
void write_detections(const std::filesystem::path& path, const std::vector<Detection>& detections);
std::vector<Detection> read_detections(const std::filesystem::path& path);

}  // namespace vehcov
