#pragma once

// JSON documents shared by the HTTP API and the static report.

#include <map>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "classilist/analytics.hpp"
#include "classilist/error.hpp"
#include "classilist/model.hpp"

namespace classilist {

using Json = nlohmann::json;

/// Raised when request parameters or bodies are malformed (HTTP 400).
class BadRequest : public Error {
public:
    using Error::Error;
};

/// Content hash of a dataset, 16 lower-case hex digits.
std::string dataset_fingerprint(const Dataset& dataset);

Json spec_to_json(const HistogramSpec& spec);
/// Reads the spec keys (bins, lo, hi, groups, tn_min, tp_max) from a JSON
/// object; absent keys keep their defaults. Validates the result.
HistogramSpec spec_from_json(const Json& j);

using QueryParams = std::multimap<std::string, std::string>;

/// Same keys as spec_from_json, taken from URL query parameters.
HistogramSpec spec_from_query(const QueryParams& params);
OutcomeSet parse_groups(std::string_view list);
std::string groups_to_string(OutcomeSet groups);

Json meta_document(const Dataset& dataset, std::string_view fingerprint);
Json histogram_document(const Dataset& dataset, const ClassHistogram& histogram, bool members);
/// {"spec": ..., "histograms": [...]}
Json histograms_document(const Dataset& dataset, const HistogramSpec& spec,
                         std::span<const ClassIndex> classes, bool members);
Json confusion_document(const Dataset& dataset, const ConfusionMatrix& matrix, bool members);
Json selection_document(const Dataset& dataset, const HistogramSpec& spec,
                        const SelectionResult& selection);
Json sample_document(const Dataset& dataset, RecordIndex record, bool outcomes);
Json feature_stats_document(const Dataset& dataset, const FeatureSummary& summary,
                            std::size_t selected);
Json whatif_document(const Dataset& dataset, const WhatIfReport& report);
Json per_class_counts_document(const Dataset& dataset,
                               std::span<const ClassOutcomeCounts> counts);

/// Relative URL of a sample's image endpoint.
std::string image_url(std::string_view sample_id);
std::string percent_encode(std::string_view text);

}  // namespace classilist
