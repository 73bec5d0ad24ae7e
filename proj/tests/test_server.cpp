#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>
#include <unistd.h>

#include "classilist/error.hpp"
#include "classilist/server.hpp"
#include "support/fixtures.hpp"

using namespace classilist;
namespace fs = std::filesystem;

namespace {

// Runs a server on a free port for the lifetime of the object.
struct Running {
    std::shared_ptr<ServerState> state;
    HttpServer server;
    std::thread thread;
    std::mutex log_mutex;
    std::vector<std::string> log;

    explicit Running(ServerOptions options = {})
        : state(std::make_shared<ServerState>(testing::t1())),
          server(state, with_log(std::move(options))) {
        server.bind();
        thread = std::thread([this] { server.run(); });
        server.wait_until_ready();
    }
    ~Running() {
        server.stop();
        thread.join();
    }

    ServerOptions with_log(ServerOptions options) {
        options.port = 0;
        options.log = [this](const std::string& line) {
            std::lock_guard lock(log_mutex);
            log.push_back(line);
        };
        return options;
    }

    httplib::Client client() const { return httplib::Client("127.0.0.1", server.port()); }
};

}  // namespace

TEST_CASE("serves the API over HTTP") {
    Running r;
    CHECK(r.server.port() > 0);
    auto cli = r.client();

    auto res = cli.Get("/api/meta");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type").starts_with("application/json"));
    const auto meta = nlohmann::json::parse(res->body);
    CHECK(meta["n"] == 6);
    CHECK(meta["classes"] == nlohmann::json::array({"A", "B", "C"}));

    res = cli.Get("/api/histograms?class=A&bins=10&members=true");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto h = nlohmann::json::parse(res->body);
    CHECK(h["histograms"][0]["bins"][5]["members"]["fp"] == nlohmann::json::array({"s4", "s6"}));

    res = cli.Get("/api/histograms?tn_min=0");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = cli.Post("/api/selection", R"({"selection":{"type":"cell","actual":"C","predicted":"A"}})",
                   "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(nlohmann::json::parse(res->body)["sample_ids"] == nlohmann::json::array({"s4"}));

    res = cli.Post("/api/whatif", R"({"weights":[1,1,2]})", "application/json");
    REQUIRE(res);
    CHECK(nlohmann::json::parse(res->body)["changed"].size() == 1);

    res = cli.Get("/api/samples?ids=sX");
    REQUIRE(res);
    CHECK(res->status == 404);

    res = cli.Delete("/api/meta");
    REQUIRE(res);
    CHECK(res->status == 405);

    res = cli.Get("/");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type").starts_with("text/html"));

    // Lines are logged after the response is sent, so they may lag or reorder.
    bool logged = false;
    for (int i = 0; i < 200 && !logged; ++i) {
        {
            std::lock_guard lock(r.log_mutex);
            for (const auto& line : r.log) logged = logged || line.starts_with("GET /api/meta 200 ");
        }
        if (!logged) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    CHECK(logged);
}

TEST_CASE("identical HTTP requests return identical bytes") {
    Running r;
    auto cli = r.client();
    const auto a = cli.Get("/api/histograms?members=true&bins=7");
    const auto b = cli.Get("/api/histograms?members=true&bins=7");
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->body == b->body);
}

TEST_CASE("reload is visible to the next request") {
    Running r;
    auto cli = r.client();
    CHECK(nlohmann::json::parse(cli.Get("/api/meta")->body)["n"] == 6);
    r.state->reload(testing::random_dataset(4, {50, 3, 0, false}));
    const auto n = nlohmann::json::parse(cli.Get("/api/meta")->body)["n"].get<std::size_t>();
    CHECK(n == testing::random_dataset(4, {50, 3, 0, false}).size());
    r.state->unload();
    CHECK(cli.Get("/api/meta")->status == 503);
}

TEST_CASE("serves UI assets from a directory") {
    const fs::path dir = fs::temp_directory_path() / ("classilist_ui_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "index.html") << "<html>ui</html>";
    {
        ServerOptions options;
        options.ui_dir = dir;
        Running r(options);
        auto cli = r.client();
        auto res = cli.Get("/index.html");
        REQUIRE(res);
        CHECK(res->body == "<html>ui</html>");
        res = cli.Get("/");
        REQUIRE(res);
        CHECK(res->body == "<html>ui</html>");
        CHECK(cli.Get("/api/meta")->status == 200);
    }
    fs::remove_all(dir);
}

TEST_CASE("concurrent clients") {
    Running r;
    std::atomic<int> ok{0};
    std::vector<std::thread> clients;
    for (int t = 0; t < 8; ++t)
        clients.emplace_back([&] {
            auto cli = r.client();
            for (int i = 0; i < 10; ++i) {
                auto res = cli.Get("/api/confusion");
                if (res && res->status == 200) ++ok;
            }
        });
    for (auto& c : clients) c.join();
    CHECK(ok == 80);
}

TEST_CASE("bind failure is an IoError") {
    Running r;
    ServerOptions options;
    options.port = r.server.port();
    HttpServer second(r.state, options);
    CHECK_THROWS_AS(second.bind(), IoError);
}

TEST_CASE("stop before or right after run starts still shuts down") {
    for (int i = 0; i < 50; ++i) {
        auto state = std::make_shared<ServerState>(testing::t1());
        ServerOptions options;
        options.port = 0;
        HttpServer server(state, options);
        server.bind();
        std::thread t([&] { server.run(); });
        if (i % 2) std::this_thread::yield();
        server.stop();
        t.join();
    }
    auto state = std::make_shared<ServerState>(testing::t1());
    ServerOptions options;
    options.port = 0;
    HttpServer early(state, options);
    early.bind();
    early.stop();
    early.run();
    CHECK(true);
}
