#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "vehcov/config.hpp"

using namespace vehcov;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_same(const RunConfig& a, const RunConfig& b) {
    CHECK(a.input == b.input);
    CHECK(a.calibration.angle_degrees == b.calibration.angle_degrees);
    CHECK(a.calibration.crop == b.calibration.crop);
    CHECK(a.clean.floor == b.clean.floor);
    CHECK(a.clean.median_window == b.clean.median_window);
    CHECK(a.clean.edge_gain == b.clean.edge_gain);
    CHECK(a.clean.canny_high == b.clean.canny_high);
    CHECK(a.clean.binary_threshold_override == b.clean.binary_threshold_override);
    CHECK(a.segmentation.min_component_px == b.segmentation.min_component_px);
    CHECK(a.segmentation.split_fill_max == b.segmentation.split_fill_max);
    CHECK(a.segmentation.split_area_min == b.segmentation.split_area_min);
    CHECK(a.segmentation.regroup_fill_min == b.segmentation.regroup_fill_min);
    CHECK(a.segmentation.regroup_area_max == b.segmentation.regroup_area_max);
    CHECK(a.segmentation.delete_area_max == b.segmentation.delete_area_max);
    CHECK(a.segmentation.connectivity == b.segmentation.connectivity);
    CHECK(a.segmentation.max_refine_iterations == b.segmentation.max_refine_iterations);
    CHECK(a.feature_set == b.feature_set);
    CHECK(a.eps == b.eps);
    CHECK(a.sample_covariance == b.sample_covariance);
    CHECK(a.ontology == b.ontology);
    CHECK(a.labels == b.labels);
    CHECK(a.output_dir == b.output_dir);
    CHECK(a.iou_threshold == b.iou_threshold);
    CHECK(a.seed == b.seed);
}

}  // namespace

TEST_CASE("the shipped defaults file matches the built-in defaults") {
    std::string text = slurp(std::filesystem::path(VEHCOV_SOURCE_DIR) / "config" / "defaults.cfg");
    REQUIRE(!text.empty());
    check_same(RunConfig::parse(text, "", "defaults.cfg"), RunConfig{});
}

TEST_CASE("defaults file names every key the parser accepts") {
    ConfigFile file = ConfigFile::parse(slurp(std::filesystem::path(VEHCOV_SOURCE_DIR) / "config" / "defaults.cfg"));
    ConfigFile full = ConfigFile::parse(RunConfig{}.to_text());
    for (const auto& sec : full.sections) {
        if (sec.name.empty()) continue;
        const ConfigSection* mine = file.find(sec.name);
        REQUIRE_MESSAGE(mine, sec.name);
        for (const auto& [k, v] : sec.entries) CHECK_MESSAGE(mine->get(k).has_value(), std::string(sec.name + "." + k));
    }
}

TEST_CASE("to_text round trips") {
    RunConfig cfg;
    cfg.input = "frames";
    cfg.calibration = {-12.5, Rect{3, 4, 200, 100}};
    cfg.clean.binary_threshold_override = 15.0;
    cfg.clean.canny_high = 0.3;
    cfg.segmentation.min_component_px = 80;
    cfg.segmentation.delete_area_max = 250;
    cfg.feature_set = FeatureSet::R2GradLap;
    cfg.eps = 1e-6;
    cfg.sample_covariance = true;
    cfg.ontology = "lib.json";
    cfg.labels = "labels.csv";
    cfg.output_dir = "results";
    cfg.iou_threshold = 0.4;
    cfg.seed = 77;
    check_same(RunConfig::parse(cfg.to_text(), "", "x"), cfg);
}

TEST_CASE("relative paths resolve against the config directory") {
    auto cfg = RunConfig::parse("[input]\npath=frames\n[ontology]\npath=/abs/lib.json\n", "/data/run", "x");
    CHECK(cfg.input == std::filesystem::path("/data/run/frames"));
    CHECK(cfg.ontology == std::filesystem::path("/abs/lib.json"));
}

TEST_CASE("config errors name the problem") {
    CHECK_THROWS_WITH_AS(RunConfig::parse("[bogus]\nx=1\n"), doctest::Contains("unknown section"), Error);
    CHECK_THROWS_WITH_AS(RunConfig::parse("[clean]\nfloors=1\n"), doctest::Contains("unknown key 'floors'"), Error);
    CHECK_THROWS_WITH_AS(RunConfig::parse("[clean]\nfloor=ten\n"), doctest::Contains("floor"), Error);
    CHECK_THROWS_WITH_AS(RunConfig::parse("[clean]\nfloor=1\nfloor=2\n"), doctest::Contains("duplicate"), Error);
    CHECK_THROWS_AS(RunConfig::parse("[clean]\nmedian_window=4\n"), Error);
    CHECK_THROWS_AS(RunConfig::parse("[calibration]\nangle_deg=95\n"), Error);
    CHECK_THROWS_AS(RunConfig::parse("[calibration]\ncrop=1,2,3\n"), Error);
    CHECK_THROWS_AS(RunConfig::parse("[run]\nseed=-1\n"), Error);
    CHECK_THROWS_AS(RunConfig::parse("[clean\n"), Error);
    CHECK_THROWS_AS(RunConfig::parse("[clean]\nfloor=1\n[clean]\nedge_gain=2\n"), Error);
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/run.cfg"), Error);
}

TEST_CASE("comments and whitespace") {
    auto cfg = RunConfig::parse("; leading\n  [clean]  \n  floor = 12   # inline\n\n# done\n");
    CHECK(cfg.clean.floor == 12.0);
}

TEST_CASE("value parsers") {
    CHECK(parse_point("p", " 3.5, -2 ").x == 3.5);
    CHECK(parse_rect("r", "1,2,3,4") == Rect{1, 2, 3, 4});
    CHECK(parse_bool("b", "yes"));
    CHECK_THROWS_AS(parse_bool("b", "maybe"), Error);
    CHECK(format_real(0.1) == "0.1");
    CHECK(parse_real("x", format_real(1.0 / 3.0)) == 1.0 / 3.0);
}
