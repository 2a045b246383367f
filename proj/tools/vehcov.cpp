#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "vehcov/calibration.hpp"
#include "vehcov/config.hpp"
#include "vehcov/evaluation.hpp"
#include "vehcov/pipeline.hpp"
#include "vehcov/server.hpp"
#include "vehcov/synthetic.hpp"

using namespace vehcov;
namespace fs = std::filesystem;

namespace {

RunConfig load_config(const std::string& path) { return path.empty() ? RunConfig{} : RunConfig::load(path); }

std::vector<int> parse_frame_list(const std::string& text) {
    std::vector<int> frames;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        auto dash = part.find('-');
        if (dash != std::string::npos && dash > 0) {
            int a = static_cast<int>(parse_integer("frames", part.substr(0, dash)));
            int b = static_cast<int>(parse_integer("frames", part.substr(dash + 1)));
            for (int f = a; f <= b; ++f) frames.push_back(f);
        } else {
            frames.push_back(static_cast<int>(parse_integer("frames", part)));
        }
    }
    if (frames.empty()) throw Error("--frames is empty");
    return frames;
}

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vehicle classification with region covariance descriptors"};
    app.require_subcommand(1);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Angle and crop from two baseline clicks");
    std::string cal_p1, cal_p2, cal_crop, cal_config, cal_out, cal_preview;
    cal->add_option("--p1", cal_p1, "first baseline point x,y")->required();
    cal->add_option("--p2", cal_p2, "second baseline point x,y")->required();
    cal->add_option("--crop", cal_crop, "crop rectangle l,t,w,h in rotated coordinates");
    cal->add_option("--config", cal_config, "config to update");
    cal->add_option("--out", cal_out, "write the updated config here (default: print)");
    cal->add_option("--preview", cal_preview, "write the calibrated first frame (PPM)");

    // synth
    auto* syn = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
    std::string syn_spec, syn_preset, syn_out;
    std::uint64_t syn_seed = 0;
    auto* spec_opt = syn->add_option("--spec", syn_spec, "scene spec file");
    syn->add_option("--preset", syn_preset, "built-in scene")->excludes(spec_opt);
    syn->add_option("--seed", syn_seed, "noise seed");
    syn->add_option("--out", syn_out, "output directory")->required();

    // build-ontology
    auto* bo = app.add_subcommand("build-ontology", "Describe labeled regions into an ontology file");
    std::string bo_config, bo_labels, bo_truth, bo_frames, bo_out;
    std::optional<std::uint64_t> bo_seed;
    bo->add_option("--config", bo_config, "run config (input sequence, parameters)")->required();
    auto* labels_opt = bo->add_option("--labels", bo_labels, "CSV frame_index,region_id,label");
    auto* truth_opt = bo->add_option("--truth", bo_truth, "label regions from ground truth instead")->excludes(labels_opt);
    bo->add_option("--frames", bo_frames, "frames to take from --truth, e.g. 0,5,10-12")->needs(truth_opt);
    bo->add_option("--out", bo_out, "ontology path (default: [ontology] path)");
    bo->add_option("--seed", bo_seed, "override [run] seed");

    // classify
    auto* cl = app.add_subcommand("classify", "Run the full pipeline");
    std::string cl_config, cl_out, cl_dump, cl_resume;
    std::optional<std::uint64_t> cl_seed;
    cl->add_option("--config", cl_config, "run config")->required();
    cl->add_option("--seed", cl_seed, "override [run] seed");
    cl->add_option("--out", cl_out, "output directory (default: [output] dir)");
    cl->add_option("--dump-stage", cl_dump, "dump calibrated|subtracted|cleaned|binary under <out>/stages");
    cl->add_option("--resume", cl_resume, "resume from a stage dump directory");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Score detections against ground truth");
    std::string ev_truth, ev_pred, ev_out;
    double ev_iou = 0.5;
    ev->add_option("--truth", ev_truth, "ground truth CSV")->required();
    ev->add_option("--pred", ev_pred, "detections.jsonl")->required();
    ev->add_option("--out", ev_out, "write the JSON report here");
    ev->add_option("--iou", ev_iou, "match threshold");

    // serve
    auto* sv = app.add_subcommand("serve", "HTTP API for the annotator");
    std::string sv_config;
    int sv_port = 8080;
    sv->add_option("--config", sv_config, "run config")->required();
    sv->add_option("--port", sv_port, "local port");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cal) {
            RunConfig cfg = load_config(cal_config);
            cfg.calibration.angle_degrees = angle_from_baseline(parse_point("p1", cal_p1), parse_point("p2", cal_p2));
            if (!cal_crop.empty()) cfg.calibration.crop = parse_rect("crop", cal_crop);
            cfg.calibration.validate();
            if (!cal_preview.empty()) {
                auto seq = load_sequence(cfg.input);
                write_ppm(cal_preview, rotate_and_crop(seq.frames.front(), cfg.calibration));
            }
            if (cal_out.empty()) {
                std::cout << cfg.to_text();
            } else {
                std::ofstream(cal_out) << cfg.to_text();
            }
            std::cerr << "angle_deg=" << format_real(cfg.calibration.angle_degrees) << "\n";
        } else if (*syn) {
            SceneSpec spec = !syn_spec.empty() ? SceneSpec::load(syn_spec) : scene_preset(syn_preset.empty() ? "table1" : syn_preset);
            auto scene = generate(spec, syn_seed);
            write_scene(scene, syn_out);
            std::cout << "wrote " << scene.frames.size() << " frames to " << syn_out << "\n";
        } else if (*bo) {
            RunConfig cfg = load_config(bo_config);
            if (bo_seed) cfg.seed = *bo_seed;
            if (bo_labels.empty() && bo_truth.empty()) {
                if (cfg.labels.empty()) throw Error("give --labels or --truth (or set [ontology] labels)");
                bo_labels = cfg.labels.string();
            }
            fs::path out = bo_out.empty() ? cfg.ontology : fs::path(bo_out);
            if (out.empty()) throw Error("no ontology path: give --out or set [ontology] path");
            Analysis a = analyze(prepare(load_sequence(cfg.input), cfg), cfg);
            std::vector<LabelRow> rows;
            std::string source;
            if (!bo_truth.empty()) {
                GroundTruth truth = read_ground_truth(bo_truth);
                std::vector<int> frames;
                if (bo_frames.empty())
                    for (size_t f = 0; f < a.segments.size(); ++f) frames.push_back(static_cast<int>(f));
                else
                    frames = parse_frame_list(bo_frames);
                rows = labels_from_truth(a, truth, frames, cfg.iou_threshold);
                source = fs::path(bo_truth).filename().string();
            } else {
                rows = read_labels(bo_labels);
                source = fs::path(bo_labels).filename().string();
            }
            OntologyLibrary lib = build_ontology(a, rows, cfg, source);
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            lib.save(out);
            std::cout << "wrote " << lib.size() << " entries to " << out.string() << "\n";
        } else if (*cl) {
            RunConfig cfg = load_config(cl_config);
            if (cl_seed) cfg.seed = *cl_seed;
            if (!cl_out.empty()) cfg.output_dir = cl_out;
            RunOptions opts;
            if (!cl_dump.empty()) opts.dump_stage = parse_stage(cl_dump);
            if (!cl_resume.empty()) opts.resume_dir = cl_resume;
            PipelineResult result = run_pipeline(cfg, opts);
            write_pipeline_outputs(result, cfg.output_dir);
            for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
            long cars = 0, trucks = 0;
            for (const auto& c : result.per_frame) {
                cars += c.cars;
                trucks += c.trucks;
            }
            std::cout << result.per_frame.size() << " frames, " << result.detections.size() << " detections (" << cars
                      << " car, " << trucks << " truck) -> " << cfg.output_dir.string() << "\n";
        } else if (*ev) {
            GroundTruth truth = read_ground_truth(ev_truth);
            EvaluationReport report = evaluate(read_detections(ev_pred), truth, ev_iou);
            std::cout << report.to_table();
            if (!ev_out.empty()) std::ofstream(ev_out) << report.to_json() << "\n";
        } else if (*sv) {
            Server server(load_config(sv_config));
            int port = server.start(sv_port);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "serving on http://127.0.0.1:" << port << "\n";
            while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            server.stop();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
