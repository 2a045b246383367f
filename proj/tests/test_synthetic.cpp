#include "doctest.h"
#include "support.hpp"
#include "vehcov/config.hpp"
#include "vehcov/pipeline.hpp"
#include "vehcov/synthetic.hpp"

using namespace vehcov;

TEST_CASE("an empty scene is background plus noise with no truth") {
    SceneSpec spec = scene_preset("empty");
    spec.n_frames = 6;
    spec.noise_sigma = 0.0;
    auto scene = generate(spec, 1);
    REQUIRE(scene.frames.size() == 6);
    for (const auto& f : scene.frames.frames) CHECK(f == scene.frames.frames[0]);
    for (const auto& t : scene.truth.frames) CHECK(t.empty());

    // Noiseless and static: every frame subtracts to exactly zero.
    auto bg = mean_background(scene.frames);
    for (const auto& f : scene.frames.frames)
        for (double v : subtract_gray(f, bg).pixels) CHECK(v == 0.0);

    spec.noise_sigma = 2.0;
    auto noisy = generate(spec, 1);
    CHECK(noisy.frames.frames[0] != noisy.frames.frames[1]);
    for (const auto& t : noisy.truth.frames) CHECK(t.empty());
}

TEST_CASE("a car at speed 5 moves 5 px per frame") {
    SceneSpec spec;
    spec.n_frames = 10;
    VehicleTrack t;
    t.speed = 5;
    t.start_x = 20;
    t.lane_y = 40;
    spec.vehicles = {t};
    auto scene = generate(spec, 3);
    for (int n = 0; n < 10; ++n) {
        REQUIRE(scene.truth.frames[n].size() == 1);
        CHECK(scene.truth.frames[n][0].bbox.left == 20 + 5 * n);
        CHECK(scene.truth.frames[n][0].bbox.top == 40);
        CHECK(scene.truth.frames[n][0].label == ClassLabel::Car);
    }
}

TEST_CASE("generation is deterministic in spec and seed") {
    SceneSpec spec = scene_preset("table1");
    auto a = generate(spec, 9), b = generate(spec, 9), c = generate(spec, 10);
    CHECK(a.frames.frames == b.frames.frames);
    CHECK(a.frames.frames != c.frames.frames);
    for (const auto& f : a.frames.frames)
        for (const auto& p : f.planes)
            for (double v : p) CHECK(v == std::round(v));
}

TEST_CASE("table1 scene composition") {
    auto scene = generate(scene_preset("table1"), 7);
    int cars = 0, trucks = 0, junk = 0, frames_with = 0;
    for (const auto& f : scene.truth.frames) {
        frames_with += !f.empty();
        for (const auto& t : f) {
            cars += t.label == ClassLabel::Car;
            trucks += t.label == ClassLabel::Truck;
            junk += t.label == ClassLabel::Junk;
        }
    }
    CHECK(scene.frames.size() == 50);
    CHECK(cars == 16);
    CHECK(trucks == 2);
    CHECK(junk == 1);
}

TEST_CASE("rendered vehicles are solid in the noiseless binary frame") {
    SceneSpec spec = scene_preset("table1");
    spec.noise_sigma = 0.0;
    auto scene = generate(spec, 1);
    RunConfig cfg;
    auto prep = prepare(scene.frames, cfg);
    for (size_t n = 0; n < scene.truth.frames.size(); ++n)
        for (const auto& t : scene.truth.frames[n]) {
            if (t.label == ClassLabel::Junk) continue;
            long set = 0;
            for (int y = t.bbox.top; y < t.bbox.bottom(); ++y)
                for (int x = t.bbox.left; x < t.bbox.right(); ++x) set += prep.binary[n].at(x, y);
            CHECK(static_cast<double>(set) / t.bbox.area() >= 0.7);
        }
}

TEST_CASE("presets cover the failure modes") {
    for (const auto& name : scene_preset_names()) CHECK_NOTHROW(scene_preset(name).validate());
    CHECK_THROWS_AS(scene_preset("nope"), Error);

    auto overlap = generate(scene_preset("overlap"), 1);
    bool multiple = false;
    for (const auto& f : overlap.truth.frames)
        for (const auto& t : f) multiple = multiple || t.label == ClassLabel::Multiple;
    CHECK(multiple);

    SceneSpec pole = scene_preset("pole");
    REQUIRE(pole.pole.has_value());
    auto ps = generate(pole, 1);
    CHECK(ps.frames.frames[0].at(pole.pole->x + 1, 5, 0) == doctest::Approx(pole.pole->intensity).epsilon(0.2));

    SceneSpec wagon = scene_preset("station_wagon");
    CHECK(wagon.vehicles[0].body_width() > VehicleTrack{}.body_width());
    auto ws = generate(wagon, 1);
    bool wagon_as_car = false;
    for (const auto& f : ws.truth.frames)
        for (const auto& t : f) wagon_as_car = wagon_as_car || (t.label == ClassLabel::Car && t.bbox.width == 45);
    CHECK(wagon_as_car);
}

TEST_CASE("scene files round trip") {
    SceneSpec spec = scene_preset("pole");
    spec.lane_lines = true;
    spec.vehicles[0].start_x = 12.5;
    SceneSpec back = SceneSpec::parse(spec.to_text());
    CHECK(generate(back, 4).frames.frames == generate(spec, 4).frames.frames);
    CHECK_THROWS_AS(SceneSpec::parse("width=0\n"), Error);
    CHECK_THROWS_AS(SceneSpec::parse("[vehicle]\nclass=bus\n"), Error);
    CHECK_THROWS_AS(SceneSpec::parse("colour=red\n"), Error);
}

TEST_CASE("written scenes load back with their truth") {
    testing::TempDir dir("synth");
    auto scene = generate(scene_preset("table1"), 2);
    write_scene(scene, dir.path);
    auto seq = load_sequence(dir.path);
    CHECK(seq.frames == scene.frames.frames);
    auto truth = read_ground_truth(dir / "truth.csv");
    REQUIRE(truth.n_frames() == 50);
    for (size_t n = 0; n < 50; ++n) {
        REQUIRE(truth.frames[n].size() == scene.truth.frames[n].size());
        for (size_t i = 0; i < truth.frames[n].size(); ++i) {
            CHECK(truth.frames[n][i].bbox == scene.truth.frames[n][i].bbox);
            CHECK(truth.frames[n][i].label == scene.truth.frames[n][i].label);
        }
    }
}
