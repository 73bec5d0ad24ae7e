#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "classilist/api.hpp"

namespace httplib {
class Server;
}

namespace classilist {

struct ServerOptions {
    std::string host = "127.0.0.1";
    /// 0 picks a free port.
    int port = 8080;
    /// Directory with the UI assets; a placeholder page is served when unset.
    std::optional<std::filesystem::path> ui_dir;
    /// Receives one line per handled request.
    std::function<void(const std::string&)> log;
};

/// HTTP front end over a ServerState.
class HttpServer {
public:
    HttpServer(std::shared_ptr<ServerState> state, ServerOptions options);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds the socket and returns the bound port. Throws IoError on failure.
    int bind();
    /// Serves until stop() is called. bind() must have succeeded.
    void run();
    void stop();
    /// Blocks until the listener is accepting connections.
    void wait_until_ready() const;

    int port() const noexcept { return port_; }

private:
    std::shared_ptr<ServerState> state_;
    ServerOptions options_;
    std::unique_ptr<httplib::Server> server_;
    int port_ = -1;
    std::atomic<bool> run_entered_{false};
    std::atomic<bool> stop_requested_{false};
    std::atomic<bool> run_exited_{false};
};

}  // namespace classilist
