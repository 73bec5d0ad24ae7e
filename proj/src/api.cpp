#include "classilist/api.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string_view>

#include "classilist/analytics.hpp"
#include "classilist/error.hpp"

namespace classilist {

std::shared_ptr<const Snapshot> ServerState::snapshot() const {
    std::lock_guard lock(mutex_);
    return current_;
}

void ServerState::reload(Dataset dataset) {
    std::string fingerprint = dataset_fingerprint(dataset);
    auto next = std::make_shared<const Snapshot>(Snapshot{std::move(dataset), std::move(fingerprint)});
    std::lock_guard lock(mutex_);
    current_ = std::move(next);
}

void ServerState::unload() {
    std::lock_guard lock(mutex_);
    current_.reset();
}

namespace {

class NotFound : public Error {
public:
    using Error::Error;
};

class MethodNotAllowed : public Error {
public:
    using Error::Error;
};

ApiResponse json_response(const Json& doc, int status = 200) {
    return {status, "application/json", doc.dump()};
}

ApiResponse error_response(int status, std::string_view message) {
    return json_response(Json{{"error", std::string(message)}, {"status", status}}, status);
}

bool flag_param(const QueryParams& params, const char* key) {
    auto it = params.find(key);
    if (it == params.end()) return false;
    const std::string& v = it->second;
    if (v.empty() || v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw BadRequest(std::string("parameter '") + key + "' must be true or false");
}

ClassIndex class_by_name(const Dataset& d, const std::string& name) {
    if (auto c = d.find_class(name)) return *c;
    throw BadRequest("unknown class '" + name + "'");
}

/// Accepts either a class name or a 0-based index.
ClassIndex class_from_json(const Dataset& d, const Json& j, const char* field) {
    if (j.is_string()) return class_by_name(d, j.get<std::string>());
    if (j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        const auto c = j.get<std::size_t>();
        if (c >= d.class_count()) throw BadRequest(std::string("'") + field + "' out of range");
        return c;
    }
    throw BadRequest(std::string("'") + field + "' must be a class name or index");
}

std::vector<RecordIndex> ids_param(const Dataset& d, const QueryParams& params) {
    std::vector<std::string> ids;
    auto [first, last] = params.equal_range("ids");
    for (auto it = first; it != last; ++it) {
        std::string_view list = it->second;
        while (!list.empty()) {
            const auto comma = list.find(',');
            if (comma != 0) ids.emplace_back(list.substr(0, comma));
            if (comma == std::string_view::npos) break;
            list.remove_prefix(comma + 1);
        }
    }
    auto [f2, l2] = params.equal_range("id");
    for (auto it = f2; it != l2; ++it) ids.push_back(it->second);

    std::vector<RecordIndex> records;
    records.reserve(ids.size());
    for (const auto& id : ids) {
        auto r = d.find(id);
        if (!r) throw NotFound("unknown sample id '" + id + "'");
        records.push_back(*r);
    }
    return records;
}

Json parse_body(const std::string& body) {
    try {
        return Json::parse(body);
    } catch (const Json::parse_error& e) {
        throw BadRequest(std::string("body is not valid JSON: ") + e.what());
    }
}

void require_method(const ApiRequest& req, std::string_view method) {
    if (req.method != method)
        throw MethodNotAllowed("method " + req.method + " not allowed on " + req.path +
                               " (expected " + std::string(method) + ")");
}

// ---------------------------------------------------------------------------
// Endpoints

ApiResponse get_meta(const Snapshot& s) {
    return json_response(meta_document(s.dataset, s.fingerprint));
}

ApiResponse get_histograms(const Snapshot& s, const ApiRequest& req) {
    const auto spec = spec_from_query(req.params);
    std::vector<ClassIndex> classes;
    auto [first, last] = req.params.equal_range("class");
    for (auto it = first; it != last; ++it) classes.push_back(class_by_name(s.dataset, it->second));
    if (classes.empty())
        for (ClassIndex c = 0; c < s.dataset.class_count(); ++c) classes.push_back(c);
    return json_response(
        histograms_document(s.dataset, spec, classes, flag_param(req.params, "members")));
}

ApiResponse get_confusion(const Snapshot& s, const ApiRequest& req) {
    return json_response(confusion_document(s.dataset, confusion_matrix(s.dataset),
                                            flag_param(req.params, "members")));
}

ApiResponse post_selection(const Snapshot& s, const ApiRequest& req) {
    const Json body = parse_body(req.body);
    if (!body.is_object()) throw BadRequest("body must be a JSON object");
    const HistogramSpec spec = spec_from_json(body.value("spec", Json::object()));
    auto sel_it = body.find("selection");
    if (sel_it == body.end() || !sel_it->is_object())
        throw BadRequest("body needs a 'selection' object");
    const Json& sel = *sel_it;
    const auto histograms = build_all_histograms(s.dataset, spec);

    const std::string type = sel.value("type", "");
    SelectionResult result;
    if (type == "bar") {
        if (!sel.contains("class") || !sel.contains("bin"))
            throw BadRequest("bar selection needs 'class' and 'bin'");
        const ClassIndex c = class_from_json(s.dataset, sel["class"], "class");
        const Json& bin = sel["bin"];
        if (!bin.is_number_integer() || bin.get<std::int64_t>() < 0)
            throw BadRequest("'bin' must be a non-negative integer");
        std::optional<Outcome> group;
        if (auto g = sel.find("group"); g != sel.end() && !g->is_null()) {
            if (!g->is_string()) throw BadRequest("'group' must be one of tp, fp, fn, tn");
            group = parse_outcome(g->get<std::string>());
            if (!group) throw BadRequest("'group' must be one of tp, fp, fn, tn");
        }
        try {
            result = select_bar(s.dataset, histograms, c, bin.get<std::size_t>(), group);
        } catch (const RangeError& e) {
            throw BadRequest(e.what());
        }
    } else if (type == "cell") {
        if (!sel.contains("actual") || !sel.contains("predicted"))
            throw BadRequest("cell selection needs 'actual' and 'predicted'");
        result = select_cell(s.dataset, histograms, class_from_json(s.dataset, sel["actual"], "actual"),
                             class_from_json(s.dataset, sel["predicted"], "predicted"));
    } else {
        throw BadRequest("selection type must be 'bar' or 'cell'");
    }
    return json_response(selection_document(s.dataset, spec, result));
}

ApiResponse get_samples(const Snapshot& s, const ApiRequest& req) {
    const auto records = ids_param(s.dataset, req.params);
    const bool outcomes = flag_param(req.params, "outcomes");
    Json list = Json::array();
    for (RecordIndex r : records) list.push_back(sample_document(s.dataset, r, outcomes));
    Json classes = Json::array();
    for (const auto& c : s.dataset.classes()) classes.push_back(c.name);
    Json features = Json::array();
    for (const auto& f : s.dataset.feature_names()) features.push_back(f);
    return json_response(Json{{"classes", classes}, {"features", features}, {"samples", list}});
}

ApiResponse get_feature_stats(const Snapshot& s, const ApiRequest& req) {
    const auto records = ids_param(s.dataset, req.params);
    return json_response(
        feature_stats_document(s.dataset, feature_summary(s.dataset, records), records.size()));
}

ApiResponse post_whatif(const Snapshot& s, const ApiRequest& req) {
    const Json body = parse_body(req.body);
    if (!body.is_object() || !body.contains("weights"))
        throw BadRequest("body needs a 'weights' field");
    const Json& w = body["weights"];
    std::vector<double> weights;
    if (w.is_array()) {
        for (const auto& v : w) {
            if (!v.is_number()) throw BadRequest("weights must be numbers");
            weights.push_back(v.get<double>());
        }
    } else if (w.is_object()) {
        weights.assign(s.dataset.class_count(), 1.0);
        for (const auto& [name, v] : w.items()) {
            if (!v.is_number()) throw BadRequest("weights must be numbers");
            weights[class_by_name(s.dataset, name)] = v.get<double>();
        }
    } else {
        throw BadRequest("'weights' must be a list or an object keyed by class name");
    }
    try {
        return json_response(whatif_document(s.dataset, reweight_whatif(s.dataset, weights)));
    } catch (const WeightError& e) {
        throw BadRequest(e.what());
    }
}

ApiResponse get_image(const Snapshot& s, std::string_view id) {
    auto r = s.dataset.find(id);
    if (!r) throw NotFound("unknown sample id '" + std::string(id) + "'");
    const auto& ref = s.dataset.record(*r).image_ref;
    if (!ref) throw NotFound("sample '" + std::string(id) + "' has no image");
    std::ifstream in(*ref, std::ios::binary);
    if (!in) throw NotFound("image for sample '" + std::string(id) + "' is missing");
    std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const auto ext = std::filesystem::path(*ref).extension().string();
    return {200, ext == ".png" ? "image/png" : "image/jpeg", std::move(bytes)};
}

using Handler = ApiResponse (*)(const Snapshot&, const ApiRequest&);

struct Route {
    std::string_view path;
    std::string_view method;
    Handler handler;
};

constexpr Route kRoutes[] = {
    {"/api/meta", "GET", [](const Snapshot& s, const ApiRequest&) { return get_meta(s); }},
    {"/api/histograms", "GET", get_histograms},
    {"/api/confusion", "GET", get_confusion},
    {"/api/selection", "POST", post_selection},
    {"/api/samples", "GET", get_samples},
    {"/api/feature-stats", "GET", get_feature_stats},
    {"/api/whatif", "POST", post_whatif},
};

constexpr std::string_view kImagePrefix = "/api/image/";

ApiResponse dispatch(const Snapshot& s, const ApiRequest& req) {
    for (const auto& route : kRoutes) {
        if (req.path != route.path) continue;
        require_method(req, route.method);
        return route.handler(s, req);
    }
    if (req.path.starts_with(kImagePrefix) && req.path.size() > kImagePrefix.size()) {
        require_method(req, "GET");
        return get_image(s, std::string_view(req.path).substr(kImagePrefix.size()));
    }
    throw NotFound("no endpoint " + req.path);
}

}  // namespace

ApiResponse handle_api(const ServerState& state, const ApiRequest& request) {
    const auto snapshot = state.snapshot();
    if (!snapshot) return error_response(503, "no dataset loaded");
    try {
        return dispatch(*snapshot, request);
    } catch (const BadRequest& e) {
        return error_response(400, e.what());
    } catch (const SpecError& e) {
        return error_response(400, e.what());
    } catch (const NotFound& e) {
        return error_response(404, e.what());
    } catch (const LookupError& e) {
        return error_response(404, e.what());
    } catch (const MethodNotAllowed& e) {
        return error_response(405, e.what());
    } catch (const Json::exception& e) {
        return error_response(400, e.what());
    }
}

}  // namespace classilist
