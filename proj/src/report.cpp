#include "classilist/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>

#include "classilist/csv.hpp"
#include "classilist/error.hpp"

namespace classilist {

namespace {

std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out += c;
        }
    }
    return out;
}

struct GroupStyle {
    const char* key;
    const char* label;
    const char* color;
};

// Stacking order and colors of the outcome groups.
constexpr GroupStyle kGroups[] = {
    {"tp", "TP", "#2ca02c"},
    {"fp", "FP", "#ff7f0e"},
    {"fn", "FN", "#d62728"},
    {"tn", "TN", "#9e9e9e"},
};

std::string fmt(double v) { return csv::format_number(v); }

std::string axis_label(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

/// Probability runs upward; bars grow to the right, stacked by group.
void render_histogram(std::ostringstream& out, const Json& h, std::size_t max_count) {
    constexpr double width = 220, height = 200, left = 36, top = 6, bottom = 6;
    const auto& bins = h["bins"];
    const std::size_t n = bins.size();
    const double plot_w = width - left - 8;
    const double plot_h = height - top - bottom;
    const double row_h = n ? plot_h / static_cast<double>(n) : plot_h;

    out << "<figure class=\"hist\"><figcaption>" << html_escape(h["class"].get<std::string>())
        << " <span class=\"muted\">(" << h["total"].get<std::size_t>() << ")</span></figcaption>"
        << "<svg width=\"" << width << "\" height=\"" << height << "\" viewBox=\"0 0 " << width
        << ' ' << height << "\">";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << top + plot_h << "\" stroke=\"#444\"/>";

    for (std::size_t i = 0; i < n; ++i) {
        const auto& bin = bins[i];
        const double y = top + plot_h - static_cast<double>(i + 1) * row_h;
        double x = left;
        for (const auto& g : kGroups) {
            auto it = bin["counts"].find(g.key);
            if (it == bin["counts"].end()) continue;
            const auto count = it->get<std::size_t>();
            if (count == 0) continue;
            const double w = plot_w * static_cast<double>(count) / static_cast<double>(max_count);
            out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y + 1) << "\" width=\"" << fmt(w)
                << "\" height=\"" << fmt(std::max(row_h - 2, 1.0)) << "\" fill=\"" << g.color
                << "\"><title>" << g.label << ' ' << count << " in [" << fmt(bin["lo"].get<double>())
                << ", " << fmt(bin["hi"].get<double>()) << ")</title></rect>";
            x += w;
        }
    }
    if (n > 0) {
        const double lo = bins.front()["lo"].get<double>();
        const double hi = bins.back()["hi"].get<double>();
        out << "<text x=\"" << left - 3 << "\" y=\"" << top + plot_h
            << "\" text-anchor=\"end\" class=\"tick\">" << axis_label(lo) << "</text>";
        out << "<text x=\"" << left - 3 << "\" y=\"" << top + 9
            << "\" text-anchor=\"end\" class=\"tick\">" << axis_label(hi) << "</text>";
    }
    out << "</svg></figure>\n";
}

}  // namespace

Json report_document(const Dataset& dataset, const HistogramSpec& spec, bool members) {
    std::vector<ClassIndex> classes(dataset.class_count());
    for (ClassIndex c = 0; c < classes.size(); ++c) classes[c] = c;
    return Json{{"meta", meta_document(dataset, dataset_fingerprint(dataset))},
                {"histograms", histograms_document(dataset, spec, classes, members)},
                {"confusion", confusion_document(dataset, confusion_matrix(dataset), members)},
                {"per_class_counts", per_class_counts_document(dataset, per_class_counts(dataset))}};
}

std::string render_report_html(const Json& report) {
    const auto& meta = report["meta"];
    const auto& hists = report["histograms"]["histograms"];
    const auto& spec = report["histograms"]["spec"];

    std::size_t max_count = 1;
    for (const auto& h : hists)
        for (const auto& b : h["bins"]) max_count = std::max(max_count, b["total"].get<std::size_t>());

    std::ostringstream out;
    out << "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>Classification report</title>\n"
        << "<style>\n"
        << "body{font-family:sans-serif;margin:1.5em;color:#222}\n"
        << ".grid{display:flex;flex-wrap:wrap;gap:8px}\n"
        << ".hist{margin:0;border:1px solid #ddd;padding:4px}\n"
        << "figcaption{font-weight:bold;font-size:13px}\n"
        << ".muted{color:#888;font-weight:normal}\n"
        << ".tick{font-size:9px;fill:#555}\n"
        << "table{border-collapse:collapse;margin:1em 0}\n"
        << "td,th{border:1px solid #ccc;padding:2px 8px;text-align:right}\n"
        << ".diag{background:#e8f5e9}\n"
        << ".key span{display:inline-block;width:12px;height:12px;margin:0 4px 0 12px}\n"
        << "</style></head><body>\n";

    out << "<h1>Classification report</h1>\n<p>" << meta["n"].get<std::size_t>() << " samples, "
        << meta["classes"].size() << " classes, fingerprint <code>"
        << html_escape(meta["fingerprint"].get<std::string>()) << "</code></p>\n";

    out << "<p>Bins: " << spec["bins"].get<std::size_t>() << " over ["
        << fmt(spec["lo"].get<double>()) << ", " << fmt(spec["hi"].get<double>()) << "], groups:";
    for (const auto& g : spec["groups"]) out << ' ' << html_escape(g.get<std::string>());
    out << ", tn_min " << fmt(spec["tn_min"].get<double>()) << ", tp_max "
        << fmt(spec["tp_max"].get<double>()) << "</p>\n<p class=\"key\">";
    for (const auto& g : kGroups)
        out << "<span style=\"background:" << g.color << "\"></span>" << g.label;
    out << "</p>\n<div class=\"grid\">\n";
    for (const auto& h : hists) render_histogram(out, h, max_count);
    out << "</div>\n";

    const auto& conf = report["confusion"];
    const auto& names = conf["classes"];
    out << "<h2>Confusion matrix</h2>\n<table><tr><th>actual \\ predicted</th>";
    for (const auto& n : names) out << "<th>" << html_escape(n.get<std::string>()) << "</th>";
    out << "</tr>\n";
    for (std::size_t t = 0; t < names.size(); ++t) {
        out << "<tr><th>" << html_escape(names[t].get<std::string>()) << "</th>";
        for (std::size_t p = 0; p < names.size(); ++p)
            out << "<td" << (t == p ? " class=\"diag\"" : "") << ">"
                << conf["matrix"][t][p].get<std::size_t>() << "</td>";
        out << "</tr>\n";
    }
    out << "</table>\n";

    out << "<h2>Per-class outcomes</h2>\n<table><tr><th>class</th><th>TP</th><th>FP</th>"
        << "<th>FN</th><th>TN</th></tr>\n";
    for (const auto& c : report["per_class_counts"])
        out << "<tr><th>" << html_escape(c["class"].get<std::string>()) << "</th><td>"
            << c["tp"].get<std::size_t>() << "</td><td>" << c["fp"].get<std::size_t>()
            << "</td><td>" << c["fn"].get<std::size_t>() << "</td><td>"
            << c["tn"].get<std::size_t>() << "</td></tr>\n";
    out << "</table>\n</body></html>\n";
    return out.str();
}

void write_report(const Dataset& dataset, const HistogramSpec& spec, bool members,
                  const std::filesystem::path& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());

    const Json doc = report_document(dataset, spec, members);
    auto write = [&](const char* name, const std::string& text) {
        std::ofstream out(directory / name, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + (directory / name).string());
        out << text;
        if (!out) throw IoError("error while writing " + (directory / name).string());
    };
    write("report.json", doc.dump(2) + "\n");
    write("report.html", render_report_html(doc));
}

}  // namespace classilist
