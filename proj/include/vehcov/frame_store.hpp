#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vehcov/image.hpp"

namespace vehcov {

/// Ordered frames of identical dimensions plus the file each came from.
struct FrameSequence {
    std::vector<ColorImage> frames;
    std::vector<std::string> source_ids;

    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    size_t size() const { return frames.size(); }
};

// Binary PGM (P5) / PPM (P6), maxval <= 255. Grayscale input is replicated
// into all three channels.
ColorImage decode_pnm(std::span<const unsigned char> bytes, const std::string& name = "<memory>");
std::vector<unsigned char> encode_ppm(const ColorImage& img);
std::vector<unsigned char> encode_pgm(const GrayImage& img);
/// Binary masks are written as 0/255.
std::vector<unsigned char> encode_pgm(const BinaryImage& img);
BinaryImage decode_binary_pgm(std::span<const unsigned char> bytes, const std::string& name = "<memory>");

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const unsigned char> bytes);

ColorImage read_image(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ColorImage& img);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

/// Loads a sequence from a manifest file, or from a directory. A directory
/// containing `manifest.txt` uses it; otherwise every *.ppm / *.pgm is taken
/// in lexicographic filename order.
FrameSequence load_sequence(const std::filesystem::path& manifest_or_directory);

/// Manifest entries (relative paths resolved against the manifest's directory).
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest);

// Lossless double-precision raster used for stage dumps:
//   "F64 <width> <height> <channels>\n" followed by little-endian IEEE doubles,
//   channel-planar, row-major.
void write_f64(const std::filesystem::path& path, const GrayImage& img);
void write_f64(const std::filesystem::path& path, const ColorImage& img);
GrayImage read_f64_gray(const std::filesystem::path& path);
ColorImage read_f64_color(const std::filesystem::path& path);

}  // namespace vehcov
