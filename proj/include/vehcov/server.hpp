#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <thread>

#include "vehcov/pipeline.hpp"

namespace httplib {
class Server;
}

namespace vehcov {

/// Local HTTP service for the annotation workflow. Reads run concurrently;
/// label, calibration and commit requests take a single writer slot and are
/// rejected with 409 while another write is in flight.
class Server {
public:
    /// Loads the input sequence and, when present, the ontology for suggestions.
    explicit Server(RunConfig cfg);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds to 127.0.0.1:`port` (0 picks a free port) and serves on a
    /// background thread. Throws if the port is taken. Returns the bound port.
    int start(int port);
    void stop();
    /// Blocks until stop() is called from elsewhere.
    void wait();

    std::filesystem::path labels_path() const { return labels_path_; }
    std::filesystem::path ontology_path() const { return ontology_path_; }

    /// Holds the writer slot; lets tests exercise the 409 path.
    std::unique_lock<std::mutex> try_acquire_writer() { return std::unique_lock(writer_, std::try_to_lock); }

private:
    void routes();
    void recompute();

    RunConfig cfg_;
    FrameSequence raw_;
    std::optional<Point> p1_, p2_;
    Analysis analysis_;
    std::optional<OntologyLibrary> library_;
    std::filesystem::path labels_path_;
    std::filesystem::path ontology_path_;

    mutable std::shared_mutex state_;
    std::mutex writer_;
    std::unique_ptr<httplib::Server> http_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace vehcov
