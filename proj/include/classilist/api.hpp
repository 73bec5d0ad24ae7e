#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "classilist/documents.hpp"
#include "classilist/model.hpp"

namespace classilist {

/// One loaded dataset together with its content hash.
struct Snapshot {
    Dataset dataset;
    std::string fingerprint;
};

/// Holder of the dataset currently being served. Readers take a shared
/// snapshot and keep it for the whole request; a reload swaps the pointer
/// only after the new snapshot is fully built.
class ServerState {
public:
    ServerState() = default;
    explicit ServerState(Dataset dataset) { reload(std::move(dataset)); }

    std::shared_ptr<const Snapshot> snapshot() const;
    void reload(Dataset dataset);
    void unload();

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const Snapshot> current_;
};

struct ApiRequest {
    std::string method = "GET";
    /// Path without the query string, e.g. "/api/histograms".
    std::string path;
    QueryParams params;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Transport-independent request handler for every /api/ endpoint.
ApiResponse handle_api(const ServerState& state, const ApiRequest& request);

}  // namespace classilist
