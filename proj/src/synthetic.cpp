#include "vehcov/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "vehcov/config.hpp"

namespace vehcov {

namespace fs = std::filesystem;

std::string to_string(VehicleClass c) {
    switch (c) {
        case VehicleClass::Car: return "car";
        case VehicleClass::Truck: return "truck";
        case VehicleClass::Wagon: return "wagon";
    }
    throw Error("unknown vehicle class");
}

VehicleClass parse_vehicle_class(const std::string& name) {
    for (auto c : {VehicleClass::Car, VehicleClass::Truck, VehicleClass::Wagon})
        if (to_string(c) == name) return c;
    throw Error("unknown vehicle class '" + name + "' (car, truck, wagon)");
}

int VehicleTrack::body_width() const {
    if (width > 0) return width;
    return size_class == VehicleClass::Car ? 30 : size_class == VehicleClass::Truck ? 70 : 45;
}

int VehicleTrack::body_height() const {
    if (height > 0) return height;
    return size_class == VehicleClass::Car ? 15 : size_class == VehicleClass::Truck ? 22 : 18;
}

void SceneSpec::validate() const {
    if (width < 16 || height < 16) throw Error("scene must be at least 16x16");
    if (n_frames < 1) throw Error("scene needs at least one frame");
    if (!(noise_sigma >= 0.0)) throw Error("noise_sigma must be >= 0");
    if (pole && (pole->x < 0 || pole->width < 1 || pole->x + pole->width > width))
        throw Error("pole occluder lies outside the frame");
    for (size_t i = 0; i < vehicles.size(); ++i) {
        const auto& v = vehicles[i];
        const std::string tag = "vehicle " + std::to_string(i) + ": ";
        if (v.body_width() < 3 || v.body_height() < 3) throw Error(tag + "body must be at least 3x3");
        if (v.lane_y < 0 || v.lane_y + v.body_height() > height) throw Error(tag + "does not fit the frame height");
        if (v.body_width() > width) throw Error(tag + "wider than the frame");
        if (!(std::abs(v.speed) >= 1.0)) throw Error(tag + "speed must be at least 1 px/frame");
        if (v.contrast == 0.0) throw Error(tag + "contrast must be non-zero");
        if (v.entry_frame < 0) throw Error(tag + "entry_frame must be >= 0");
    }
}

namespace {

constexpr double kRoadLevel = 110.0;

struct Placed {
    Rect body;     // unclipped
    Rect visible;  // clipped to frame
    size_t track = 0;
};

bool outside_rounded_corner(int i, int j, int w, int h) {
    constexpr int r = 3;
    auto cut = [&](int a, int b) {
        double dx = r - a - 0.5, dy = r - b - 0.5;
        return dx * dx + dy * dy > r * r;
    };
    int ci = i < r ? i : (i >= w - r ? w - 1 - i : -1);
    int cj = j < r ? j : (j >= h - r ? h - 1 - j : -1);
    return ci >= 0 && cj >= 0 && cut(ci, cj);
}

ColorImage make_background(const SceneSpec& spec) {
    std::mt19937_64 rng(spec.background_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Wave {
        double fx, fy, phase, amp;
    };
    std::vector<Wave> waves;
    for (int k = 0; k < 3; ++k)
        waves.push_back({0.01 + 0.05 * unit(rng), 0.01 + 0.08 * unit(rng), 2 * std::numbers::pi * unit(rng), 2.0 + 3.0 * unit(rng)});
    const double tint[3] = {3.0, 0.0, -3.0};

    ColorImage bg(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            double v = kRoadLevel - 10.0 + 20.0 * y / spec.height;
            for (const auto& w : waves) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
            v += 6.0 * (unit(rng) - 0.5);
            if (spec.lane_lines) {
                int l1 = spec.height / 3, l2 = 2 * spec.height / 3;
                bool on_row = (y >= l1 && y < l1 + 2) || (y >= l2 && y < l2 + 2);
                if (on_row && (x / 16) % 2 == 0) v = 215.0;
            }
            for (int c = 0; c < 3; ++c) bg.at(x, y, c) = v + tint[c];
        }
    return bg;
}

// Body-local intensity offset: windshield / seam bands darken the body.
double body_shade(VehicleClass cls, int i, int w, bool faces_right) {
    int along = faces_right ? w - 1 - i : i;  // distance from the front
    double t = static_cast<double>(along) / w;
    if (cls == VehicleClass::Truck) {
        if (t >= 0.06 && t < 0.14) return 0.45;                 // cab windshield
        if (along == static_cast<int>(0.26 * w) || along == static_cast<int>(0.26 * w) + 1) return 0.45;  // cab seam
        return 0.0;
    }
    if (t >= 0.30 && t < 0.44) return 0.45;  // windshield
    if (t >= 0.76 && t < 0.84) return 0.35;  // rear window
    return 0.0;
}

void render_vehicle(ColorImage& img, const VehicleTrack& v, const Rect& body, std::uint64_t texture_seed) {
    std::mt19937_64 rng(texture_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double tint[3];
    for (double& t : tint) t = 12.0 * (unit(rng) - 0.5);
    std::vector<double> texture(static_cast<size_t>(body.width) * body.height);
    for (auto& t : texture) t = 8.0 * (unit(rng) - 0.5);

    const bool faces_right = v.speed > 0;
    for (int j = 0; j < body.height; ++j)
        for (int i = 0; i < body.width; ++i) {
            int x = body.left + i, y = body.top + j;
            if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
            if (outside_rounded_corner(i, j, body.width, body.height)) continue;
            double shade = body_shade(v.size_class, i, body.width, faces_right);
            double level = kRoadLevel + v.contrast * (1.0 - shade) + texture[static_cast<size_t>(j) * body.width + i];
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = level + tint[c];
        }
}

Rect clip(const Rect& r, int w, int h) {
    int l = std::max(r.left, 0), t = std::max(r.top, 0);
    int rr = std::min(r.right(), w), b = std::min(r.bottom(), h);
    if (rr <= l || b <= t) return {l, t, 0, 0};
    return {l, t, rr - l, b - t};
}

Rect bounding_union(const Rect& a, const Rect& b) {
    int l = std::min(a.left, b.left), t = std::min(a.top, b.top);
    return {l, t, std::max(a.right(), b.right()) - l, std::max(a.bottom(), b.bottom()) - t};
}

}  // namespace

SyntheticScene generate(const SceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    const ColorImage background = make_background(spec);
    std::mt19937_64 noise_rng(seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0 ? spec.noise_sigma : 1.0);

    SyntheticScene scene;
    scene.truth.frames.resize(spec.n_frames);
    for (int n = 0; n < spec.n_frames; ++n) {
        ColorImage frame = background;
        std::vector<Placed> placed;
        for (size_t k = 0; k < spec.vehicles.size(); ++k) {
            const auto& v = spec.vehicles[k];
            if (n < v.entry_frame) continue;
            const int w = v.body_width(), h = v.body_height();
            double start = v.start_x ? *v.start_x : (v.speed > 0 ? -static_cast<double>(w) : spec.width);
            int x = static_cast<int>(std::lround(start + v.speed * (n - v.entry_frame)));
            Rect body{x, v.lane_y, w, h};
            Rect vis = clip(body, spec.width, spec.height);
            if (vis.width == 0) continue;
            render_vehicle(frame, v, body, seed * 1000003ULL + k);
            placed.push_back({body, vis, k});
        }
        if (spec.pole)
            for (int y = 0; y < spec.height; ++y)
                for (int x = spec.pole->x; x < spec.pole->x + spec.pole->width; ++x)
                    for (int c = 0; c < 3; ++c) frame.at(x, y, c) = spec.pole->intensity;

        for (auto& plane : frame.planes)
            for (auto& v : plane) {
                double s = spec.noise_sigma > 0 ? v + noise(noise_rng) : v;
                v = std::clamp(std::round(s), 0.0, 255.0);
            }

        // Truth: merge overlapping vehicles into Multiple boxes.
        std::vector<int> group(placed.size());
        for (size_t i = 0; i < placed.size(); ++i) group[i] = static_cast<int>(i);
        std::function<int(int)> root = [&](int a) { return group[a] == a ? a : group[a] = root(group[a]); };
        for (size_t i = 0; i < placed.size(); ++i)
            for (size_t j = i + 1; j < placed.size(); ++j)
                if (intersection_area(placed[i].visible, placed[j].visible) > 0)
                    group[root(static_cast<int>(j))] = root(static_cast<int>(i));
        for (size_t i = 0; i < placed.size(); ++i) {
            if (root(static_cast<int>(i)) != static_cast<int>(i)) continue;
            Rect box = placed[i].visible;
            int members = 0;
            for (size_t j = 0; j < placed.size(); ++j)
                if (root(static_cast<int>(j)) == static_cast<int>(i)) {
                    box = bounding_union(box, placed[j].visible);
                    ++members;
                }
            ClassLabel label;
            if (members > 1) {
                label = ClassLabel::Multiple;
            } else if (placed[i].visible != placed[i].body) {
                label = ClassLabel::Junk;
            } else {
                label = spec.vehicles[placed[i].track].size_class == VehicleClass::Truck ? ClassLabel::Truck
                                                                                          : ClassLabel::Car;
            }
            scene.truth.frames[n].push_back({box, label});
        }

        std::ostringstream id;
        id << "frame_" << std::setw(4) << std::setfill('0') << n << ".ppm";
        scene.frames.frames.push_back(std::move(frame));
        scene.frames.source_ids.push_back(id.str());
    }
    return scene;
}

void write_scene(const SyntheticScene& scene, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw Error("cannot write " + (dir / "manifest.txt").string());
    manifest << "# synthetic scene, one frame per line\n";
    for (size_t i = 0; i < scene.frames.size(); ++i) {
        write_ppm(dir / scene.frames.source_ids[i], scene.frames.frames[i]);
        manifest << scene.frames.source_ids[i] << "\n";
    }
    write_ground_truth(dir / "truth.csv", scene.truth);
}

SceneSpec SceneSpec::parse(const std::string& text, const std::string& source) {
    ConfigFile file = ConfigFile::parse(text, source);
    SceneSpec spec;
    for (const auto& sec : file.sections) {
        if (sec.name.empty()) {
            for (const auto& [k, v] : sec.entries) {
                if (k == "width") spec.width = static_cast<int>(parse_integer(k, v));
                else if (k == "height") spec.height = static_cast<int>(parse_integer(k, v));
                else if (k == "frames") spec.n_frames = static_cast<int>(parse_integer(k, v));
                else if (k == "background_seed") spec.background_seed = static_cast<std::uint64_t>(parse_integer(k, v));
                else if (k == "noise_sigma") spec.noise_sigma = parse_real(k, v);
                else if (k == "lane_lines") spec.lane_lines = parse_bool(k, v);
                else if (k == "pole") {
                    if (v.empty() || v == "none") {
                        spec.pole.reset();
                    } else {
                        Point p = parse_point(k, v);
                        spec.pole = PoleOccluder{static_cast<int>(p.x), static_cast<int>(p.y)};
                    }
                } else if (k == "pole_intensity") {
                    if (!spec.pole) throw Error(source + ": pole_intensity needs pole=<x>,<width> first");
                    spec.pole->intensity = parse_real(k, v);
                } else {
                    throw Error(source + ": unknown scene key '" + k + "'");
                }
            }
        } else if (sec.name == "vehicle") {
            VehicleTrack t;
            for (const auto& [k, v] : sec.entries) {
                if (k == "class") t.size_class = parse_vehicle_class(v);
                else if (k == "entry_frame") t.entry_frame = static_cast<int>(parse_integer(k, v));
                else if (k == "lane_y") t.lane_y = static_cast<int>(parse_integer(k, v));
                else if (k == "speed") t.speed = parse_real(k, v);
                else if (k == "start_x") t.start_x = parse_real(k, v);
                else if (k == "contrast") t.contrast = parse_real(k, v);
                else if (k == "width") t.width = static_cast<int>(parse_integer(k, v));
                else if (k == "height") t.height = static_cast<int>(parse_integer(k, v));
                else throw Error(source + ": unknown vehicle key '" + k + "'");
            }
            spec.vehicles.push_back(t);
        } else {
            throw Error(source + ": unknown section [" + sec.name + "]");
        }
    }
    spec.validate();
    return spec;
}

SceneSpec SceneSpec::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scene spec " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string SceneSpec::to_text() const {
    std::ostringstream os;
    os << "width=" << width << "\nheight=" << height << "\nframes=" << n_frames << "\nbackground_seed=" << background_seed
       << "\nnoise_sigma=" << format_real(noise_sigma) << "\nlane_lines=" << (lane_lines ? "true" : "false") << "\n";
    if (pole) os << "pole=" << pole->x << "," << pole->width << "\npole_intensity=" << format_real(pole->intensity) << "\n";
    for (const auto& v : vehicles) {
        os << "\n[vehicle]\nclass=" << to_string(v.size_class) << "\nentry_frame=" << v.entry_frame
           << "\nlane_y=" << v.lane_y << "\nspeed=" << format_real(v.speed) << "\ncontrast=" << format_real(v.contrast)
           << "\n";
        if (v.start_x) os << "start_x=" << format_real(*v.start_x) << "\n";
        if (v.width > 0) os << "width=" << v.width << "\n";
        if (v.height > 0) os << "height=" << v.height << "\n";
    }
    return os.str();
}

namespace {

VehicleTrack track(VehicleClass c, int entry, int lane, double speed, double contrast) {
    VehicleTrack t;
    t.size_class = c;
    t.entry_frame = entry;
    t.lane_y = lane;
    t.speed = speed;
    t.contrast = contrast;
    return t;
}

}  // namespace

SceneSpec scene_preset(const std::string& name) {
    using VC = VehicleClass;
    SceneSpec s;
    if (name == "table1") {
        // Two cars fully in view for 8 frames each, one truck for 2 frames
        // (and clipped in a third).
        s.vehicles = {track(VC::Car, 4, 20, 40, 85), track(VC::Car, 22, 55, -40, -70),
                      track(VC::Truck, 38, 88, 120, 90)};
    } else if (name == "table1_train") {
        s.vehicles = {track(VC::Car, 2, 20, 30, 80),     track(VC::Car, 2, 55, 35, -75),
                      track(VC::Truck, 2, 88, 45, 90),   track(VC::Truck, 20, 20, -50, -80),
                      track(VC::Car, 20, 88, 32, 70),    track(VC::Car, 24, 55, -36, 90)};
    } else if (name == "overlap") {
        s.vehicles = {track(VC::Car, 0, 20, 20, 80), track(VC::Car, 0, 30, 20, -70)};
        s.vehicles[1].start_x = -20.0;
    } else if (name == "pole") {
        s.pole = PoleOccluder{150, 6, 60.0};
        s.vehicles = {track(VC::Car, 0, 30, 25, 80), track(VC::Truck, 10, 75, 30, 90)};
    } else if (name == "lane_lines") {
        s.lane_lines = true;
        s.vehicles = {track(VC::Car, 0, 33, 25, 80), track(VC::Truck, 12, 72, 30, -80)};
    } else if (name == "station_wagon") {
        s.vehicles = {track(VC::Wagon, 0, 30, 25, 80), track(VC::Car, 15, 70, 30, -75)};
    } else if (name == "empty") {
        s.vehicles.clear();
    } else {
        throw Error("unknown scene preset '" + name + "'");
    }
    s.validate();
    return s;
}

std::vector<std::string> scene_preset_names() {
    return {"table1", "table1_train", "overlap", "pole", "lane_lines", "station_wagon", "empty"};
}

}  // namespace vehcov
