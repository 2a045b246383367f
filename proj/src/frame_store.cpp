#include "vehcov/frame_store.hpp"

#include <algorithm>
#include <cctype>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vehcov {
namespace fs = std::filesystem;

namespace {

struct PnmHeader {
    char kind = 0;  // '5' or '6'
    int width = 0;
    int height = 0;
    int maxval = 0;
    size_t data_offset = 0;
};

class HeaderReader {
public:
    HeaderReader(std::span<const unsigned char> b, const std::string& name) : bytes_(b), name_(name) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            unsigned char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    int read_int(const char* what) {
        skip_space_and_comments();
        long v = 0;
        size_t start = pos_;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000) fail(std::string("implausible ") + what);
            ++pos_;
        }
        if (pos_ == start) fail(std::string("missing ") + what);
        return static_cast<int>(v);
    }

    PnmHeader parse() {
        if (bytes_.size() < 2 || bytes_[0] != 'P' || (bytes_[1] != '5' && bytes_[1] != '6'))
            fail("not a binary PGM/PPM (expected P5 or P6)");
        PnmHeader h;
        h.kind = static_cast<char>(bytes_[1]);
        pos_ = 2;
        h.width = read_int("width");
        h.height = read_int("height");
        h.maxval = read_int("maxval");
        if (h.width <= 0 || h.height <= 0) fail("zero image dimension");
        if (h.maxval <= 0 || h.maxval > 255) fail("unsupported maxval " + std::to_string(h.maxval));
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("malformed header");
        h.data_offset = pos_ + 1;
        size_t channels = h.kind == '6' ? 3 : 1;
        size_t need = static_cast<size_t>(h.width) * h.height * channels;
        if (bytes_.size() - h.data_offset < need) fail("truncated pixel data");
        return h;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw Error(name_ + ": " + msg); }

private:
    std::span<const unsigned char> bytes_;
    std::string name_;
    size_t pos_ = 0;
};

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
}

std::vector<unsigned char> header_bytes(const char* magic, int w, int h) {
    std::string hdr = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    return {hdr.begin(), hdr.end()};
}

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".ppm" || ext == ".pgm";
}

void write_f64_planes(const fs::path& path, int w, int h, std::span<const std::vector<double>* const> planes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "F64 " << w << ' ' << h << ' ' << planes.size() << '\n';
    for (const auto* plane : planes) {
        for (double v : *plane) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
            out.write(reinterpret_cast<const char*>(b), 8);
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::vector<double>> read_f64_planes(const fs::path& path, int& w, int& h, int expect_channels) {
    auto bytes = read_file_bytes(path);
    std::string head;
    size_t i = 0;
    while (i < bytes.size() && bytes[i] != '\n') head.push_back(static_cast<char>(bytes[i++]));
    ++i;
    std::istringstream hs(head);
    std::string magic;
    int c = 0;
    if (!(hs >> magic >> w >> h >> c) || magic != "F64" || w <= 0 || h <= 0)
        throw Error(path.string() + ": malformed F64 header");
    if (c != expect_channels)
        throw Error(path.string() + ": expected " + std::to_string(expect_channels) + " channel(s), found " +
                    std::to_string(c));
    size_t n = static_cast<size_t>(w) * h;
    if (bytes.size() < i + n * c * 8) throw Error(path.string() + ": truncated F64 data");
    std::vector<std::vector<double>> planes(c, std::vector<double>(n));
    for (auto& plane : planes) {
        for (auto& v : plane) {
            std::uint64_t bits = 0;
            for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[i + k]) << (8 * k);
            v = std::bit_cast<double>(bits);
            i += 8;
        }
    }
    return planes;
}

}  // namespace

ColorImage decode_pnm(std::span<const unsigned char> bytes, const std::string& name) {
    HeaderReader reader(bytes, name);
    PnmHeader h = reader.parse();
    ColorImage img(h.width, h.height);
    const unsigned char* data = bytes.data() + h.data_offset;
    size_t n = static_cast<size_t>(h.width) * h.height;
    if (h.kind == '6') {
        for (size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c) img.planes[c][i] = data[3 * i + c];
    } else {
        for (size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c) img.planes[c][i] = data[i];
    }
    return img;
}

BinaryImage decode_binary_pgm(std::span<const unsigned char> bytes, const std::string& name) {
    HeaderReader reader(bytes, name);
    PnmHeader h = reader.parse();
    if (h.kind != '5') reader.fail("expected a P5 mask");
    BinaryImage img(h.width, h.height);
    for (size_t i = 0; i < img.size(); ++i) img.pixels[i] = bytes[h.data_offset + i] ? 1 : 0;
    return img;
}

std::vector<unsigned char> encode_ppm(const ColorImage& img) {
    auto out = header_bytes("P6", img.width, img.height);
    size_t n = static_cast<size_t>(img.width) * img.height;
    out.reserve(out.size() + 3 * n);
    for (size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) out.push_back(to_byte(img.planes[c][i]));
    return out;
}

std::vector<unsigned char> encode_pgm(const GrayImage& img) {
    auto out = header_bytes("P5", img.width, img.height);
    for (double v : img.pixels) out.push_back(to_byte(v));
    return out;
}

std::vector<unsigned char> encode_pgm(const BinaryImage& img) {
    auto out = header_bytes("P5", img.width, img.height);
    for (auto v : img.pixels) out.push_back(v ? 255 : 0);
    return out;
}

std::vector<unsigned char> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

ColorImage read_image(const fs::path& path) {
    auto bytes = read_file_bytes(path);
    return decode_pnm(bytes, path.filename().string());
}

void write_ppm(const fs::path& path, const ColorImage& img) { write_file_bytes(path, encode_ppm(img)); }
void write_pgm(const fs::path& path, const GrayImage& img) { write_file_bytes(path, encode_pgm(img)); }

std::vector<fs::path> read_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw Error("cannot open manifest " + manifest.string());
    std::vector<fs::path> paths;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        paths.push_back(manifest.parent_path() / line.substr(first, last - first + 1));
    }
    return paths;
}

FrameSequence load_sequence(const fs::path& manifest_or_directory) {
    if (!fs::exists(manifest_or_directory)) throw Error("no such path: " + manifest_or_directory.string());

    std::vector<fs::path> files;
    if (fs::is_directory(manifest_or_directory)) {
        auto manifest = manifest_or_directory / "manifest.txt";
        if (fs::exists(manifest)) {
            files = read_manifest(manifest);
        } else {
            for (const auto& entry : fs::directory_iterator(manifest_or_directory))
                if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
            std::sort(files.begin(), files.end(),
                      [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
        }
    } else {
        files = read_manifest(manifest_or_directory);
    }
    if (files.empty()) throw Error("no frames found in " + manifest_or_directory.string());

    FrameSequence seq;
    seq.frames.reserve(files.size());
    for (const auto& f : files) {
        ColorImage img = read_image(f);
        if (!seq.frames.empty() && (img.width != seq.width() || img.height != seq.height())) {
            throw Error("dimension mismatch in " + f.filename().string() + ": " + std::to_string(img.width) + "x" +
                        std::to_string(img.height) + ", expected " + std::to_string(seq.width()) + "x" +
                        std::to_string(seq.height()));
        }
        seq.frames.push_back(std::move(img));
        seq.source_ids.push_back(f.filename().string());
    }
    return seq;
}

void write_f64(const fs::path& path, const GrayImage& img) {
    const std::vector<double>* planes[] = {&img.pixels};
    write_f64_planes(path, img.width, img.height, planes);
}

void write_f64(const fs::path& path, const ColorImage& img) {
    const std::vector<double>* planes[] = {&img.planes[0], &img.planes[1], &img.planes[2]};
    write_f64_planes(path, img.width, img.height, planes);
}

GrayImage read_f64_gray(const fs::path& path) {
    int w = 0, h = 0;
    auto planes = read_f64_planes(path, w, h, 1);
    GrayImage img;
    img.width = w;
    img.height = h;
    img.pixels = std::move(planes[0]);
    return img;
}

ColorImage read_f64_color(const fs::path& path) {
    int w = 0, h = 0;
    auto planes = read_f64_planes(path, w, h, 3);
    ColorImage img;
    img.width = w;
    img.height = h;
    for (int c = 0; c < 3; ++c) img.planes[c] = std::move(planes[c]);
    return img;
}

}  // namespace vehcov
