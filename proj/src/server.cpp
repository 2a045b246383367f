#include "vehcov/server.hpp"

#include <cmath>

#include "httplib.h"
#include "json.hpp"
#include "vehcov/calibration.hpp"

namespace vehcov {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

ojson rect_json(const Rect& r) {
    return {{"left", r.left}, {"top", r.top}, {"width", r.width}, {"height", r.height}};
}

Rect rect_from(const nlohmann::json& j) {
    return {j.at("left").get<int>(), j.at("top").get<int>(), j.at("width").get<int>(), j.at("height").get<int>()};
}

ojson finite_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

void reply(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void fail(httplib::Response& res, int status, const std::string& message) { reply(res, status, {{"error", message}}); }

ojson label_json(const LabelRow& r) {
    return {{"frame", r.frame},
            {"region_id", r.region_id},
            {"label", r.label ? to_string(*r.label) : std::string("Ignore")}};
}

}  // namespace

Server::Server(RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.input.empty()) throw Error("no input configured ([input] path)");
    raw_ = load_sequence(cfg_.input);
    labels_path_ = cfg_.labels.empty() ? cfg_.output_dir / "labels.csv" : cfg_.labels;
    ontology_path_ = cfg_.ontology.empty() ? cfg_.output_dir / "ontology.json" : cfg_.ontology;
    if (fs::exists(ontology_path_)) {
        library_ = OntologyLibrary::load(ontology_path_);
        library_->require_compatible(cfg_.feature_set, cfg_.normalization());
    }
    recompute();
}

Server::~Server() { stop(); }

void Server::recompute() { analysis_ = analyze(prepare(raw_, cfg_), cfg_); }

int Server::start(int port) {
    if (http_) throw Error("server already running");
    http_ = std::make_unique<httplib::Server>();
    // httplib's default adds SO_REUSEPORT, which lets a second server share
    // the port silently instead of failing.
    http_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
    if (port == 0) {
        port_ = http_->bind_to_any_port("127.0.0.1");
        if (port_ < 0) {
            http_.reset();
            throw Error("could not bind any local port");
        }
    } else {
        if (!http_->bind_to_port("127.0.0.1", port)) {
            http_.reset();
            throw Error("port " + std::to_string(port) + " is busy");
        }
        port_ = port;
    }
    thread_ = std::thread([this] { http_->listen_after_bind(); });
    return port_;
}

void Server::stop() {
    if (http_) http_->stop();
    if (thread_.joinable()) thread_.join();
    http_.reset();
}

void Server::wait() {
    if (thread_.joinable()) thread_.join();
}

void Server::routes() {
    auto& svr = *http_;

    svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            fail(res, 500, e.what());
        }
    });

    svr.Get("/api/meta", [this](const httplib::Request&, httplib::Response& res) {
        std::shared_lock lock(state_);
        const auto& cleaned = analysis_.prep.cleaned;
        reply(res, 200,
              {{"frames", analysis_.prep.size()},
               {"width", cleaned.empty() ? 0 : cleaned.front().width},
               {"height", cleaned.empty() ? 0 : cleaned.front().height},
               {"threshold", analysis_.prep.threshold},
               {"feature_set", to_string(cfg_.feature_set)},
               {"normalization", to_string(cfg_.normalization())},
               {"labels_path", labels_path_.string()},
               {"ontology_path", ontology_path_.string()},
               {"ontology_entries", library_ ? library_->size() : 0},
               {"classes", {"Car", "Truck", "Multiple", "Junk", "Ignore"}}});
    });

    svr.Get(R"(/api/frames/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
        std::shared_lock lock(state_);
        size_t i = std::stoul(req.matches[1]);
        if (i >= analysis_.prep.calibrated.size()) return fail(res, 404, "no frame " + std::to_string(i));
        auto bytes = encode_ppm(analysis_.prep.calibrated[i]);
        res.set_content(std::string(bytes.begin(), bytes.end()), "image/x-portable-pixmap");
    });

    svr.Get(R"(/api/frames/(\d+)/regions)", [this](const httplib::Request& req, httplib::Response& res) {
        std::shared_lock lock(state_);
        size_t i = std::stoul(req.matches[1]);
        if (i >= analysis_.segments.size()) return fail(res, 404, "no frame " + std::to_string(i));
        ojson out = ojson::array();
        const auto& regions = analysis_.segments[i].regions;
        for (size_t r = 0; r < regions.size(); ++r) {
            const Region& region = regions[r];
            ojson item = {{"region_id", r},
                          {"bbox", rect_json(region.bbox)},
                          {"fill_fraction", region.fill_fraction},
                          {"suggested_label", nullptr},
                          {"distance", nullptr},
                          {"margin", nullptr}};
            if (library_ && !library_->empty() && region.bbox.width >= 3 && region.bbox.height >= 3) {
                auto c = library_->classify(describe_region(analysis_, static_cast<int>(i), region, cfg_), cfg_.eps);
                item["suggested_label"] = to_string(c.label);
                item["distance"] = c.distance;
                item["margin"] = finite_or_null(c.margin);
            }
            out.push_back(std::move(item));
        }
        reply(res, 200, out);
    });

    auto calibration_json = [this] {
        ojson j;
        j["p1"] = p1_ ? ojson{{"x", p1_->x}, {"y", p1_->y}} : ojson(nullptr);
        j["p2"] = p2_ ? ojson{{"x", p2_->x}, {"y", p2_->y}} : ojson(nullptr);
        j["crop"] = cfg_.calibration.crop ? rect_json(*cfg_.calibration.crop) : ojson(nullptr);
        j["angle_deg"] = cfg_.calibration.angle_degrees;
        return j;
    };

    svr.Get("/api/calibration", [this, calibration_json](const httplib::Request&, httplib::Response& res) {
        std::shared_lock lock(state_);
        reply(res, 200, calibration_json());
    });

    svr.Put("/api/calibration", [this, calibration_json](const httplib::Request& req, httplib::Response& res) {
        auto writer = try_acquire_writer();
        if (!writer) return fail(res, 409, "another write is in progress");
        std::optional<Point> p1, p2;
        Calibration cal;
        try {
            auto body = nlohmann::json::parse(req.body);
            if (body.contains("p1") && !body["p1"].is_null()) p1 = Point{body["p1"].at("x"), body["p1"].at("y")};
            if (body.contains("p2") && !body["p2"].is_null()) p2 = Point{body["p2"].at("x"), body["p2"].at("y")};
            if (p1.has_value() != p2.has_value()) return fail(res, 400, "p1 and p2 must be given together");
            if (p1)
                cal.angle_degrees = angle_from_baseline(*p1, *p2);
            else if (body.contains("angle_deg"))
                cal.angle_degrees = body["angle_deg"].get<double>();
            if (body.contains("crop") && !body["crop"].is_null()) cal.crop = rect_from(body["crop"]);
            cal.validate();
            if (!raw_.frames.empty()) calibrated_size(raw_.width(), raw_.height(), cal);
        } catch (const std::exception& e) {
            return fail(res, 400, e.what());
        }
        std::unique_lock lock(state_);
        RunConfig previous = cfg_;
        cfg_.calibration = cal;
        try {
            recompute();
        } catch (const std::exception& e) {
            cfg_ = previous;
            return fail(res, 400, e.what());
        }
        p1_ = p1;
        p2_ = p2;
        reply(res, 200, calibration_json());
    });

    svr.Get("/api/labels", [this](const httplib::Request&, httplib::Response& res) {
        std::shared_lock lock(state_);
        ojson out = ojson::array();
        if (fs::exists(labels_path_))
            for (const auto& r : read_labels(labels_path_)) out.push_back(label_json(r));
        reply(res, 200, out);
    });

    svr.Post("/api/labels", [this](const httplib::Request& req, httplib::Response& res) {
        auto writer = try_acquire_writer();
        if (!writer) return fail(res, 409, "another write is in progress");
        LabelRow row;
        try {
            auto body = nlohmann::json::parse(req.body);
            row.frame = body.at("frame").get<int>();
            row.region_id = body.contains("region_id") ? body["region_id"].get<int>() : body.at("region").get<int>();
            auto name = body.at("label").get<std::string>();
            if (name != "Ignore" && name != "ignore") {
                auto label = try_parse_label(name);
                if (!label) return fail(res, 400, "unknown label '" + name + "'");
                row.label = label;
            }
        } catch (const std::exception& e) {
            return fail(res, 400, std::string("malformed label request: ") + e.what());
        }
        std::unique_lock lock(state_);
        if (row.frame < 0 || static_cast<size_t>(row.frame) >= analysis_.segments.size())
            return fail(res, 404, "no frame " + std::to_string(row.frame));
        if (row.region_id < 0 || static_cast<size_t>(row.region_id) >= analysis_.segments[row.frame].regions.size())
            return fail(res, 404, "no region " + std::to_string(row.region_id) + " in frame " + std::to_string(row.frame));
        if (labels_path_.has_parent_path()) fs::create_directories(labels_path_.parent_path());
        append_label(labels_path_, row);
        reply(res, 200, label_json(row));
    });

    // Undo: drops the most recent label row.
    svr.Delete("/api/labels", [this](const httplib::Request&, httplib::Response& res) {
        auto writer = try_acquire_writer();
        if (!writer) return fail(res, 409, "another write is in progress");
        std::unique_lock lock(state_);
        std::vector<LabelRow> rows;
        if (fs::exists(labels_path_)) rows = read_labels(labels_path_);
        if (rows.empty()) return fail(res, 404, "no labels to undo");
        LabelRow last = rows.back();
        rows.pop_back();
        write_labels(labels_path_, rows);
        reply(res, 200, label_json(last));
    });

    svr.Post("/api/commit", [this](const httplib::Request&, httplib::Response& res) {
        auto writer = try_acquire_writer();
        if (!writer) return fail(res, 409, "another write is in progress");
        std::unique_lock lock(state_);
        if (!fs::exists(labels_path_)) return fail(res, 400, "no labels recorded yet");
        OntologyLibrary lib;
        try {
            lib = build_ontology(analysis_, read_labels(labels_path_), cfg_, labels_path_.filename().string());
        } catch (const std::exception& e) {
            return fail(res, 400, e.what());
        }
        if (ontology_path_.has_parent_path()) fs::create_directories(ontology_path_.parent_path());
        lib.save(ontology_path_);
        library_ = std::move(lib);
        reply(res, 200, {{"path", ontology_path_.string()}, {"entries", library_->size()}});
    });
}

}  // namespace vehcov
