#include "classilist/server.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>

#include "classilist/error.hpp"

namespace classilist {

namespace {

constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>classilist</title></head>
<body>
<h1>classilist</h1>
<p>The UI assets are not installed. Start the server with <code>--ui-dir</code> to serve them.</p>
<p>API: /api/meta, /api/histograms, /api/confusion, /api/selection, /api/samples,
/api/feature-stats, /api/whatif, /api/image/{id}</p>
</body></html>
)";

ApiRequest to_api_request(const httplib::Request& req) {
    ApiRequest out;
    out.method = req.method;
    out.path = req.path;
    for (const auto& [k, v] : req.params) out.params.emplace(k, v);
    out.body = req.body;
    return out;
}

}  // namespace

HttpServer::HttpServer(std::shared_ptr<ServerState> state, ServerOptions options)
    : state_(std::move(state)),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        const ApiResponse r = handle_api(*state_, to_api_request(req));
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    // httplib's default also sets SO_REUSEPORT, which lets a second server
    // silently share the port instead of failing to bind.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });

    server_->Get(R"(/api/.*)", handler);
    server_->Post(R"(/api/.*)", handler);
    server_->Put(R"(/api/.*)", handler);
    server_->Delete(R"(/api/.*)", handler);

    if (options_.ui_dir) {
        if (!server_->set_mount_point("/", options_.ui_dir->string()))
            throw IoError("UI directory " + options_.ui_dir->string() + " does not exist");
    } else {
        server_->Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
        });
    }

    server_->set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string message = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                message = e.what();
            } catch (...) {
            }
            res.status = 500;
            res.set_content(Json{{"error", message}, {"status", 500}}.dump(), "application/json");
        });

    if (options_.log) {
        server_->set_logger([log = options_.log](const httplib::Request& req,
                                                 const httplib::Response& res) {
            log(req.method + " " + req.path + " " + std::to_string(res.status) + " " +
                std::to_string(res.body.size()));
        });
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
    if (options_.port == 0) port_ = server_->bind_to_any_port(options_.host);
    else if (server_->bind_to_port(options_.host, options_.port)) port_ = options_.port;
    else port_ = -1;
    if (port_ < 0)
        throw IoError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    return port_;
}

// httplib ignores stop() until the accept loop has started. Either run()
// sees the stop request, or stop() sees run() and waits for the loop.
void HttpServer::run() {
    if (port_ < 0) throw IoError("server socket is not bound");
    run_entered_ = true;
    if (!stop_requested_) server_->listen_after_bind();
    run_exited_ = true;
}

void HttpServer::stop() {
    if (!server_) return;
    stop_requested_ = true;
    if (!run_entered_) return;
    while (!server_->is_running() && !run_exited_)
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace classilist
