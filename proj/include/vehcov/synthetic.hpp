#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vehcov/evaluation.hpp"
#include "vehcov/frame_store.hpp"

namespace vehcov {

/// Wagon is an in-between size that ground truth labels as a car.
enum class VehicleClass { Car, Truck, Wagon };

std::string to_string(VehicleClass c);
VehicleClass parse_vehicle_class(const std::string& name);

struct VehicleTrack {
    VehicleClass size_class = VehicleClass::Car;
    int entry_frame = 0;
    int lane_y = 0;          ///< top row of the vehicle
    double speed = 10.0;     ///< px/frame; negative drives right-to-left
    /// Left edge at entry_frame; defaults to just outside the entry side.
    std::optional<double> start_x;
    double contrast = 80.0;  ///< body intensity relative to the road
    int width = 0;           ///< 0 selects the class default
    int height = 0;

    int body_width() const;
    int body_height() const;
};

struct PoleOccluder {
    int x = 0;
    int width = 4;
    double intensity = 60.0;
};

struct SceneSpec {
    int width = 320;
    int height = 120;
    int n_frames = 50;
    std::uint64_t background_seed = 1;
    double noise_sigma = 2.0;
    std::optional<PoleOccluder> pole;
    bool lane_lines = false;
    std::vector<VehicleTrack> vehicles;

    void validate() const;

    /// key=value file: scene keys at top level, one `[vehicle]` section per track.
    static SceneSpec parse(const std::string& text, const std::string& source = "<scene>");
    static SceneSpec load(const std::filesystem::path& path);
    std::string to_text() const;
};

struct SyntheticScene {
    FrameSequence frames;
    GroundTruth truth;
};

/// Deterministic in (spec, seed). Frames hold integer intensities so a
/// PPM round trip is lossless. Vehicles fully inside the frame are labeled by
/// class, clipped ones Junk, and overlapping pairs merge into one Multiple box.
SyntheticScene generate(const SceneSpec& spec, std::uint64_t seed);

/// Writes frame_XXXX.ppm, manifest.txt and truth.csv into `dir`.
void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir);

/// Built-in scenes: table1, table1_train, overlap, pole, lane_lines,
/// station_wagon, empty.
SceneSpec scene_preset(const std::string& name);
std::vector<std::string> scene_preset_names();

}  // namespace vehcov
