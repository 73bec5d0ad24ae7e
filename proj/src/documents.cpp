#include "classilist/documents.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>

#include "classilist/csv.hpp"
#include "classilist/error.hpp"
#include "classilist/ingestion.hpp"

namespace classilist {

namespace {

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

double number_param(const std::string& key, const std::string& value) {
    auto v = csv::parse_number(value);
    if (!v) throw BadRequest("parameter '" + key + "' must be a number, got '" + value + "'");
    return *v;
}

std::size_t count_param(const std::string& key, const std::string& value) {
    std::size_t n = 0;
    auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
    if (ec != std::errc{} || end != value.data() + value.size())
        throw BadRequest("parameter '" + key + "' must be a non-negative integer, got '" + value +
                         "'");
    return n;
}

void validate_spec(const HistogramSpec& spec) {
    try {
        spec.validate();
    } catch (const SpecError& e) {
        throw BadRequest(e.what());
    }
}

Json ids_of(const Dataset& dataset, std::span<const RecordIndex> records) {
    Json ids = Json::array();
    for (RecordIndex r : records) ids.push_back(dataset.record(r).sample_id);
    return ids;
}

Json class_names(const Dataset& dataset) {
    Json names = Json::array();
    for (const auto& c : dataset.classes()) names.push_back(c.name);
    return names;
}

Json matrix_counts(const ConfusionMatrix& m) {
    Json rows = Json::array();
    for (ClassIndex t = 0; t < m.class_count(); ++t) {
        Json row = Json::array();
        for (ClassIndex p = 0; p < m.class_count(); ++p) row.push_back(m.count(t, p));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string dataset_fingerprint(const Dataset& dataset) {
    const BundleText text = serialize_bundle(dataset);
    std::uint64_t h = fnv1a(text.manifest);
    h = fnv1a(text.predictions, h);
    if (text.features) h = fnv1a(*text.features, h);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Specs

OutcomeSet parse_groups(std::string_view list) {
    OutcomeSet groups;
    while (!list.empty()) {
        const auto comma = list.find(',');
        std::string_view item = list.substr(0, comma);
        list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (item.empty()) continue;
        auto o = parse_outcome(item);
        if (!o) throw BadRequest("unknown outcome group '" + std::string(item) +
                                 "' (expected tp, fp, fn or tn)");
        groups.insert(*o);
    }
    return groups;
}

std::string groups_to_string(OutcomeSet groups) {
    std::string out;
    for (Outcome o : groups.members()) {
        if (!out.empty()) out += ',';
        out += outcome_name(o);
    }
    return out;
}

Json spec_to_json(const HistogramSpec& spec) {
    Json groups = Json::array();
    for (Outcome o : spec.groups.members()) groups.push_back(outcome_name(o));
    return Json{{"bins", spec.bin_count},   {"lo", spec.axis_lo},         {"hi", spec.axis_hi},
                {"groups", groups},         {"tn_min", spec.tn_min},      {"tp_max", spec.tp_max}};
}

HistogramSpec spec_from_json(const Json& j) {
    if (!j.is_object()) throw BadRequest("spec must be a JSON object");
    HistogramSpec spec;
    auto number = [&](const char* key, double& target) {
        auto it = j.find(key);
        if (it == j.end()) return;
        if (!it->is_number()) throw BadRequest(std::string("spec field '") + key + "' must be a number");
        target = it->get<double>();
    };
    if (auto it = j.find("bins"); it != j.end()) {
        if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
            throw BadRequest("spec field 'bins' must be a non-negative integer");
        spec.bin_count = it->get<std::size_t>();
    }
    number("lo", spec.axis_lo);
    number("hi", spec.axis_hi);
    number("tn_min", spec.tn_min);
    number("tp_max", spec.tp_max);
    if (auto it = j.find("groups"); it != j.end()) {
        if (it->is_string()) spec.groups = parse_groups(it->get<std::string>());
        else if (it->is_array()) {
            spec.groups = OutcomeSet{};
            for (const auto& g : *it) {
                if (!g.is_string()) throw BadRequest("spec field 'groups' must hold strings");
                auto o = parse_outcome(g.get<std::string>());
                if (!o) throw BadRequest("unknown outcome group '" + g.get<std::string>() + "'");
                spec.groups.insert(*o);
            }
        } else {
            throw BadRequest("spec field 'groups' must be a list");
        }
    }
    validate_spec(spec);
    return spec;
}

HistogramSpec spec_from_query(const QueryParams& params) {
    HistogramSpec spec;
    auto single = [&](const char* key) -> const std::string* {
        auto [first, last] = params.equal_range(key);
        if (first == last) return nullptr;
        if (std::next(first) != last)
            throw BadRequest(std::string("parameter '") + key + "' given more than once");
        return &first->second;
    };
    if (auto v = single("bins")) spec.bin_count = count_param("bins", *v);
    if (auto v = single("lo")) spec.axis_lo = number_param("lo", *v);
    if (auto v = single("hi")) spec.axis_hi = number_param("hi", *v);
    if (auto v = single("tn_min")) spec.tn_min = number_param("tn_min", *v);
    if (auto v = single("tp_max")) spec.tp_max = number_param("tp_max", *v);
    if (auto v = single("groups")) spec.groups = parse_groups(*v);
    validate_spec(spec);
    return spec;
}

// ---------------------------------------------------------------------------
// Documents

Json per_class_counts_document(const Dataset& dataset,
                               std::span<const ClassOutcomeCounts> counts) {
    Json out = Json::array();
    for (ClassIndex c = 0; c < counts.size(); ++c)
        out.push_back({{"class", dataset.classes()[c].name},
                       {"tp", counts[c].tp},
                       {"fp", counts[c].fp},
                       {"fn", counts[c].fn},
                       {"tn", counts[c].tn}});
    return out;
}

Json meta_document(const Dataset& dataset, std::string_view fingerprint) {
    Json features = Json::array();
    for (const auto& f : dataset.feature_names()) features.push_back(f);
    return Json{{"classes", class_names(dataset)},
                {"n", dataset.size()},
                {"features", features},
                {"has_images", dataset.has_images()},
                {"normalized", dataset.normalized()},
                {"per_class_counts", per_class_counts_document(dataset, per_class_counts(dataset))},
                {"fingerprint", std::string(fingerprint)}};
}

Json histogram_document(const Dataset& dataset, const ClassHistogram& h, bool members) {
    const auto groups = h.spec.groups.members();
    Json bins = Json::array();
    for (const auto& b : h.bins) {
        Json counts = Json::object();
        for (Outcome o : groups) counts[std::string(outcome_name(o))] = b.count(o);
        Json bin{{"lo", b.lo}, {"hi", b.hi}, {"counts", counts}, {"total", b.total()}};
        if (members) {
            Json m = Json::object();
            for (Outcome o : groups) m[std::string(outcome_name(o))] = ids_of(dataset, b.members_of(o));
            bin["members"] = std::move(m);
        }
        bins.push_back(std::move(bin));
    }
    Json range = nullptr;
    try {
        auto [lo, hi] = effective_range(dataset, h.class_index, h.spec);
        range = Json::array({lo, hi});
    } catch (const EmptySelectionError&) {
    }
    return Json{{"class", dataset.classes()[h.class_index].name},
                {"class_index", h.class_index},
                {"bins", std::move(bins)},
                {"excluded_below", h.excluded_below},
                {"excluded_above", h.excluded_above},
                {"total", h.binned_total()},
                {"effective_range", std::move(range)}};
}

Json histograms_document(const Dataset& dataset, const HistogramSpec& spec,
                         std::span<const ClassIndex> classes, bool members) {
    Json list = Json::array();
    for (ClassIndex c : classes)
        list.push_back(histogram_document(dataset, build_histogram(dataset, c, spec), members));
    return Json{{"spec", spec_to_json(spec)}, {"histograms", std::move(list)}};
}

Json confusion_document(const Dataset& dataset, const ConfusionMatrix& m, bool members) {
    Json doc{{"classes", class_names(dataset)}, {"matrix", matrix_counts(m)}, {"total", m.total()}};
    if (members) {
        Json rows = Json::array();
        for (ClassIndex t = 0; t < m.class_count(); ++t) {
            Json row = Json::array();
            for (ClassIndex p = 0; p < m.class_count(); ++p) row.push_back(ids_of(dataset, m.members(t, p)));
            rows.push_back(std::move(row));
        }
        doc["members"] = std::move(rows);
    }
    return doc;
}

Json selection_document(const Dataset& dataset, const HistogramSpec& spec,
                        const SelectionResult& selection) {
    Json highlights = Json::array();
    for (const auto& [c, bins] : selection.highlights) {
        for (const auto& [b, counts] : bins) {
            Json by_group = Json::object();
            for (const auto& [o, n] : counts) by_group[std::string(outcome_name(o))] = n;
            highlights.push_back({{"class", dataset.classes()[c].name},
                                  {"class_index", c},
                                  {"bin", b},
                                  {"counts", std::move(by_group)}});
        }
    }
    Json cells = Json::array();
    for (const auto& cell : selection.cells)
        cells.push_back({{"actual", dataset.classes()[cell.actual].name},
                         {"predicted", dataset.classes()[cell.predicted].name},
                         {"actual_index", cell.actual},
                         {"predicted_index", cell.predicted}});
    return Json{{"spec", spec_to_json(spec)},
                {"sample_ids", ids_of(dataset, selection.records)},
                {"highlights", std::move(highlights)},
                {"cells", std::move(cells)}};
}

Json sample_document(const Dataset& dataset, RecordIndex i, bool outcomes) {
    const auto& r = dataset.record(i);
    Json features = Json::array();
    for (const auto& v : r.features) features.push_back(v ? Json(*v) : Json(nullptr));
    Json doc{{"id", r.sample_id},
             {"actual", dataset.classes()[r.actual].name},
             {"predicted", dataset.classes()[dataset.predicted(i)].name},
             {"scores", r.scores},
             {"features", std::move(features)},
             {"image_url", r.image_ref ? Json(image_url(r.sample_id)) : Json(nullptr)}};
    if (outcomes) {
        Json list = Json::array();
        for (ClassIndex c = 0; c < dataset.class_count(); ++c)
            list.push_back(outcome_name(outcome_for(r.actual, dataset.predicted(i), c)));
        doc["outcomes"] = std::move(list);
    }
    return doc;
}

Json feature_stats_document(const Dataset& dataset, const FeatureSummary& summary,
                            std::size_t selected) {
    Json list = Json::array();
    for (std::size_t f = 0; f < summary.features.size(); ++f) {
        const auto& s = summary.features[f];
        Json entry{{"name", dataset.feature_names()[f]}, {"count", s.count}};
        if (s.summary) {
            entry["min"] = s.summary->min;
            entry["q1"] = s.summary->q1;
            entry["median"] = s.summary->median;
            entry["q3"] = s.summary->q3;
            entry["max"] = s.summary->max;
        } else {
            for (const char* key : {"min", "q1", "median", "q3", "max"}) entry[key] = nullptr;
        }
        list.push_back(std::move(entry));
    }
    return Json{{"selected", selected}, {"features", std::move(list)}};
}

Json whatif_document(const Dataset& dataset, const WhatIfReport& report) {
    Json changed = Json::array();
    for (const auto& c : report.changed)
        changed.push_back({{"id", dataset.record(c.record).sample_id},
                           {"old_predicted", dataset.classes()[c.old_predicted].name},
                           {"new_predicted", dataset.classes()[c.new_predicted].name}});
    Json per_class = Json::array();
    for (ClassIndex c = 0; c < dataset.class_count(); ++c) {
        const std::size_t tp_before = report.before.count(c, c);
        const std::size_t tp_after = report.after.count(c, c);
        per_class.push_back({{"class", dataset.classes()[c].name},
                             {"tp_before", tp_before},
                             {"tp_after", tp_after},
                             {"fp_before", report.before.column_sum(c) - tp_before},
                             {"fp_after", report.after.column_sum(c) - tp_after}});
    }
    return Json{{"classes", class_names(dataset)},
                {"weights", report.weights},
                {"before", {{"matrix", matrix_counts(report.before)}, {"total", report.before.total()}}},
                {"after", {{"matrix", matrix_counts(report.after)}, {"total", report.after.total()}}},
                {"changed", std::move(changed)},
                {"per_class", std::move(per_class)}};
}

std::string percent_encode(std::string_view text) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : text) {
        const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                                (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' ||
                                c == '~';
        if (unreserved) out += static_cast<char>(c);
        else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

std::string image_url(std::string_view sample_id) {
    return "/api/image/" + percent_encode(sample_id);
}

}  // namespace classilist
