#include "classilist/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <pthread.h>
#include <thread>

#include "classilist/analytics.hpp"
#include "classilist/documents.hpp"
#include "classilist/error.hpp"
#include "classilist/ingestion.hpp"
#include "classilist/report.hpp"
#include "classilist/server.hpp"

namespace classilist::cli {

namespace {

struct SpecFlags {
    std::size_t bins = 10;
    double lo = 0.0;
    double hi = 1.0;
    std::string groups = "tp,fp,fn";
    double tn_min = 0.01;
    double tp_max = 1.0;

    void attach(CLI::App& cmd) {
        cmd.add_option("--bins", bins, "number of histogram bins")->capture_default_str();
        cmd.add_option("--lo", lo, "lower end of the score axis")->capture_default_str();
        cmd.add_option("--hi", hi, "upper end of the score axis")->capture_default_str();
        cmd.add_option("--groups", groups, "comma list of tp,fp,fn,tn")->capture_default_str();
        cmd.add_option("--tn-min", tn_min, "lower bound on TN scores (> 0)")->capture_default_str();
        cmd.add_option("--tp-max", tp_max, "upper bound on TP scores")->capture_default_str();
    }

    HistogramSpec build() const {
        HistogramSpec spec;
        spec.bin_count = bins;
        spec.axis_lo = lo;
        spec.axis_hi = hi;
        spec.groups = parse_groups(groups);
        spec.tn_min = tn_min;
        spec.tp_max = tp_max;
        spec.validate();
        return spec;
    }
};

std::string plural(std::size_t n, std::string_view one, std::string_view many) {
    return std::to_string(n) + " " + std::string(n == 1 ? one : many);
}

LoadedBundle load(const std::string& path, bool normalize) {
    return load_bundle(path, LoadOptions{normalize});
}

int cmd_validate(const std::string& path, bool normalize, std::ostream& out) {
    const auto bundle = load(path, normalize);
    for (const auto& w : bundle.warnings) out << "warning: " << w.to_string() << '\n';
    const auto& d = bundle.dataset;
    out << plural(d.size(), "sample", "samples") << ", " << plural(d.class_count(), "class", "classes") << ", "
        << plural(d.feature_count(), "feature", "features") << '\n';
    return kSuccess;
}

int cmd_summary(const std::string& path, bool normalize, std::ostream& out) {
    const auto bundle = load(path, normalize);
    const auto& d = bundle.dataset;
    const auto matrix = confusion_matrix(d);

    std::size_t width = 6;
    for (const auto& c : d.classes()) width = std::max(width, c.name.size());
    width = std::max(width, std::to_string(d.size()).size());
    const std::string corner = "actual\\predicted";
    const std::size_t first = std::max(width, corner.size());

    out << "Confusion matrix (rows: actual, columns: predicted)\n";
    out << std::left << std::setw(static_cast<int>(first)) << corner << std::right;
    for (const auto& c : d.classes()) out << "  " << std::setw(static_cast<int>(width)) << c.name;
    out << '\n';
    for (const auto& t : d.classes()) {
        out << std::left << std::setw(static_cast<int>(first)) << t.name << std::right;
        for (const auto& p : d.classes())
            out << "  " << std::setw(static_cast<int>(width)) << matrix.count(t.index, p.index);
        out << '\n';
    }
    out << '\n' << "Per-class outcomes\n";
    const auto counts = per_class_counts(d);
    for (const auto& c : d.classes())
        out << c.name << ": TP=" << counts[c.index].tp << " FP=" << counts[c.index].fp
            << " FN=" << counts[c.index].fn << " TN=" << counts[c.index].tn << '\n';
    return kSuccess;
}

int cmd_report(const std::string& path, bool normalize, const std::string& out_dir,
               const HistogramSpec& spec, bool members, std::ostream& err) {
    const auto bundle = load(path, normalize);
    write_report(bundle.dataset, spec, members, out_dir);
    err << "wrote " << out_dir << "/report.json and report.html\n";
    return kSuccess;
}

int cmd_serve(const std::string& path, bool normalize, const std::string& host, int port,
              const std::string& ui_dir, std::ostream& err) {
    auto bundle = load(path, normalize);
    auto state = std::make_shared<ServerState>(std::move(bundle.dataset));

    ServerOptions options;
    options.host = host;
    options.port = port;
    if (!ui_dir.empty()) options.ui_dir = ui_dir;
    std::mutex log_mutex;
    options.log = [&err, &log_mutex](const std::string& line) {
        std::lock_guard lock(log_mutex);
        err << line << std::endl;
    };
    HttpServer server(state, options);
    const int bound = server.bind();

    // Signals are taken by a dedicated thread; the server threads inherit the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    sigset_t previous;
    pthread_sigmask(SIG_BLOCK, &signals, &previous);

    std::atomic<bool> signalled{false};
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        signalled = true;
        server.stop();
    });
    err << "serving " << host << ":" << bound << std::endl;
    server.run();
    // Wakes the waiter when the server stopped on its own.
    if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    err << "shut down" << std::endl;
    return kSuccess;
}

int default_port() {
    if (const char* env = std::getenv("CLASSILIST_PORT")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 0 && v <= 65535) return static_cast<int>(v);
    }
    return 8080;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Per-class analysis of classifier prediction scores", "classilist"};
    app.require_subcommand(1);

    std::string bundle;
    bool normalize = false;
    auto common = [&](CLI::App* cmd) {
        cmd->add_option("bundle", bundle, "bundle directory or manifest.json")->required();
        cmd->add_flag("--normalize", normalize, "row-normalize scores on load");
    };

    auto* validate = app.add_subcommand("validate", "check a bundle and report every problem");
    common(validate);
    auto* summary = app.add_subcommand("summary", "print the confusion matrix and outcome counts");
    common(summary);

    auto* report = app.add_subcommand("report", "write a static report directory");
    common(report);
    std::string out_dir;
    bool members = false;
    SpecFlags spec_flags;
    report->add_option("--out,-o", out_dir, "output directory")->required();
    report->add_flag("--members", members, "include member sample ids");
    spec_flags.attach(*report);

    auto* serve = app.add_subcommand("serve", "serve the HTTP API and UI");
    common(serve);
    std::string host = "127.0.0.1";
    int port = default_port();
    std::string ui_dir;
    serve->add_option("--host", host, "address to bind")->capture_default_str();
    serve->add_option("--port", port, "port (default $CLASSILIST_PORT or 8080)")
        ->check(CLI::Range(0, 65535));
    serve->add_option("--ui-dir", ui_dir, "directory with UI assets");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << "run with --help for usage\n";
        return kEnvironmentFailure;
    }

    try {
        if (validate->parsed()) return cmd_validate(bundle, normalize, out);
        if (summary->parsed()) return cmd_summary(bundle, normalize, out);
        if (report->parsed()) {
            HistogramSpec spec;
            try {
                spec = spec_flags.build();
            } catch (const Error& e) {
                err << "error: " << e.what() << '\n';
                return kEnvironmentFailure;
            }
            return cmd_report(bundle, normalize, out_dir, spec, members, err);
        }
        if (serve->parsed()) return cmd_serve(bundle, normalize, host, port, ui_dir, err);
    } catch (const LoadError& e) {
        for (const auto& issue : e.issues()) out << "error: " << issue.to_string() << '\n';
        err << plural(e.issues().size(), "problem", "problems") << " found\n";
        return kValidationFailure;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kEnvironmentFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kEnvironmentFailure;
    }
    return kEnvironmentFailure;
}

}  // namespace classilist::cli
