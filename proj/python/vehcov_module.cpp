#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vehcov/calibration.hpp"
#include "vehcov/pipeline.hpp"
#include "vehcov/synthetic.hpp"

namespace py = pybind11;
using namespace vehcov;

namespace {

GrayImage gray_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw Error("expected a 2-D array");
    GrayImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
    return img;
}

py::array_t<double> array_from_gray(const GrayImage& img) {
    py::array_t<double> out({img.height, img.width});
    std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
    return out;
}

py::array_t<double> array_from_color(const ColorImage& img) {
    py::array_t<double> out({img.height, img.width, 3});
    double* p = out.mutable_data();
    for (size_t i = 0; i < img.planes[0].size(); ++i)
        for (int c = 0; c < 3; ++c) *p++ = img.planes[c][i];
    return out;
}

py::dict detection_dict(const Detection& d) {
    py::dict out;
    out["frame"] = d.frame;
    out["bbox"] = py::make_tuple(d.bbox.left, d.bbox.top, d.bbox.width, d.bbox.height);
    out["label"] = to_string(d.label);
    out["distance"] = d.distance;
    out["margin"] = d.margin;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Region covariance vehicle classification";
    py::register_exception<Error>(m, "VehcovError", PyExc_ValueError);

    m.def("spd_distance",
          [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps) { return spd_distance(a, b, eps); },
          py::arg("a"), py::arg("b"), py::arg("eps") = kDefaultEps);
    m.def("generalized_eigenvalues",
          [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps) { return generalized_eigenvalues(a, b, eps); },
          py::arg("a"), py::arg("b"), py::arg("eps") = kDefaultEps);
    m.def("region_covariance",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& region, const std::string& fs,
             bool sample) {
              return describe(gray_from_array(region), parse_feature_set(fs),
                              sample ? Normalization::Sample : Normalization::Population)
                  .matrix;
          },
          py::arg("region"), py::arg("feature_set") = "code_default", py::arg("sample") = false);
    m.def("median_filter", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
                              int window) { return array_from_gray(median_filter(gray_from_array(img), window)); },
          py::arg("image"), py::arg("window") = 5);
    m.def("angle_from_baseline",
          [](std::pair<double, double> p1, std::pair<double, double> p2) {
              return angle_from_baseline({p1.first, p1.second}, {p2.first, p2.second});
          });
    m.def("sensitivity", &sensitivity);
    m.def("specificity", &specificity);

    m.def("scene_presets", &scene_preset_names);
    m.def("synthesize",
          [](const std::string& preset, std::uint64_t seed, const std::filesystem::path& out) {
              auto scene = generate(scene_preset(preset), seed);
              write_scene(scene, out);
              return scene.frames.size();
          },
          py::arg("preset"), py::arg("seed"), py::arg("out"));
    m.def("load_frames", [](const std::filesystem::path& path) {
        py::list frames;
        for (const auto& f : load_sequence(path).frames) frames.append(array_from_color(f));
        return frames;
    });

    m.def("build_ontology",
          [](const std::filesystem::path& config, const std::filesystem::path& truth, const std::vector<int>& frames,
             const std::filesystem::path& out) {
              RunConfig cfg = RunConfig::load(config);
              Analysis a = analyze(prepare(load_sequence(cfg.input), cfg), cfg);
              auto rows = labels_from_truth(a, read_ground_truth(truth), frames, cfg.iou_threshold);
              auto lib = build_ontology(a, rows, cfg, truth.filename().string());
              lib.save(out);
              return lib.size();
          },
          py::arg("config"), py::arg("truth"), py::arg("frames"), py::arg("out"));
    m.def("run_pipeline",
          [](const std::filesystem::path& config, std::optional<std::uint64_t> seed, bool write) {
              RunConfig cfg = RunConfig::load(config);
              if (seed) cfg.seed = *seed;
              PipelineResult r;
              {
                  py::gil_scoped_release release;
                  r = run_pipeline(cfg);
                  if (write) write_pipeline_outputs(r, cfg.output_dir);
              }
              py::list out;
              for (const auto& d : r.detections) out.append(detection_dict(d));
              return out;
          },
          py::arg("config"), py::arg("seed") = py::none(), py::arg("write") = false);
    m.def("evaluate",
          [](const std::filesystem::path& detections, const std::filesystem::path& truth, double iou) {
              auto report = evaluate(read_detections(detections), read_ground_truth(truth), iou);
              py::dict out;
              for (auto [name, s] : {std::pair{"car", report.car}, std::pair{"truck", report.truck}}) {
                  py::dict c;
                  c["total"] = s.total;
                  c["correct"] = s.correctly_identified;
                  c["sensitivity"] = s.sensitivity();
                  c["specificity"] = s.specificity();
                  out[name] = c;
              }
              return out;
          },
          py::arg("detections"), py::arg("truth"), py::arg("iou") = 0.5);
}
