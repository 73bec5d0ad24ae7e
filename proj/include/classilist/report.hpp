#pragma once

#include <filesystem>
#include <string>

#include "classilist/analytics.hpp"
#include "classilist/documents.hpp"

namespace classilist {

/// meta + histograms (the /api/histograms body for all classes) +
/// confusion (the /api/confusion body) + per-class counts.
Json report_document(const Dataset& dataset, const HistogramSpec& spec, bool members);

/// Standalone page that draws a report document without a server.
std::string render_report_html(const Json& report);

/// Writes report.json and report.html into `directory`, creating it if needed.
void write_report(const Dataset& dataset, const HistogramSpec& spec, bool members,
                  const std::filesystem::path& directory);

}  // namespace classilist
