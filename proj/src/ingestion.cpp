#include "classilist/ingestion.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>
#include <system_error>

#include "classilist/csv.hpp"

namespace classilist {

namespace fs = std::filesystem;

namespace {

using IssueList = std::vector<Issue>;

void add(IssueList& issues, std::string_view file, std::size_t line, std::string message) {
    issues.push_back({std::string(file), line, std::move(message)});
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) throw IoError("error while reading " + path.string());
    return text;
}

void write_file(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("error while writing " + path.string());
}

// ---------------------------------------------------------------------------
// predictions.csv

/// `seen_ids` receives every non-empty id, including those on rejected rows,
/// so that features.csv is not blamed for them a second time.
PredictionTable read_predictions(std::string_view text, std::string_view file, IssueList& issues,
                                 std::unordered_set<std::string>* seen_ids = nullptr) {
    PredictionTable table;
    const std::size_t baseline = issues.size();
    const auto parsed = csv::parse(text);
    if (parsed.unterminated_quote_line)
        add(issues, file, *parsed.unterminated_quote_line, "unterminated quoted field");
    if (parsed.rows.empty()) {
        add(issues, file, 1, "missing header row");
        return table;
    }

    const auto& header = parsed.rows.front();
    std::optional<std::size_t> id_col, actual_col;
    std::vector<std::size_t> score_cols;
    {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < header.fields.size(); ++i) {
            const std::string& name = header.fields[i];
            if (!seen.insert(name).second) {
                add(issues, file, header.line, "duplicate header column '" + name + "'");
                continue;
            }
            if (name == "id") id_col = i;
            else if (name == "actual") actual_col = i;
            else if (name.starts_with(kScorePrefix)) {
                std::string cls = name.substr(kScorePrefix.size());
                if (cls.empty()) {
                    add(issues, file, header.line, "score column without a class name");
                    continue;
                }
                score_cols.push_back(i);
                table.class_names.push_back(std::move(cls));
            }
        }
    }
    if (!id_col) add(issues, file, header.line, "missing header column 'id'");
    if (!actual_col) add(issues, file, header.line, "missing header column 'actual'");
    if (score_cols.size() < 2)
        add(issues, file, header.line,
            "need at least 2 'score:<class>' columns, found " + std::to_string(score_cols.size()));
    if (issues.size() != baseline) return table;

    std::unordered_map<std::string_view, ClassIndex> class_index;
    for (ClassIndex c = 0; c < table.class_names.size(); ++c)
        class_index.emplace(table.class_names[c], c);

    std::unordered_map<std::string, std::size_t> first_line;
    const std::size_t k = table.class_names.size();
    for (std::size_t r = 1; r < parsed.rows.size(); ++r) {
        const auto& row = parsed.rows[r];
        if (row.fields.size() != header.fields.size()) {
            add(issues, file, row.line,
                "expected " + std::to_string(header.fields.size()) + " fields, got " +
                    std::to_string(row.fields.size()));
            continue;
        }
        bool row_ok = true;
        PredictionRecord rec;
        rec.sample_id = row.fields[*id_col];
        if (rec.sample_id.empty()) {
            add(issues, file, row.line, "empty sample id");
            row_ok = false;
        } else if (auto [it, inserted] = first_line.emplace(rec.sample_id, row.line); !inserted) {
            add(issues, file, row.line,
                "duplicate sample id '" + rec.sample_id + "' (first seen on line " +
                    std::to_string(it->second) + ")");
            row_ok = false;
        }

        const std::string& actual = row.fields[*actual_col];
        if (auto it = class_index.find(actual); it != class_index.end()) rec.actual = it->second;
        else {
            add(issues, file, row.line, "actual label '" + actual + "' is not a known class");
            row_ok = false;
        }

        rec.scores.resize(k);
        bool scores_ok = true;
        bool any_positive = false;
        for (ClassIndex c = 0; c < k; ++c) {
            const std::string& cell = row.fields[score_cols[c]];
            auto v = csv::parse_number(cell);
            if (!v) {
                add(issues, file, row.line,
                    "non-numeric score '" + cell + "' for class '" + table.class_names[c] + "'");
                scores_ok = false;
            } else if (!std::isfinite(*v)) {
                add(issues, file, row.line,
                    "non-finite score for class '" + table.class_names[c] + "'");
                scores_ok = false;
            } else if (*v < 0.0) {
                add(issues, file, row.line,
                    "negative score " + cell + " for class '" + table.class_names[c] + "'");
                scores_ok = false;
            } else {
                rec.scores[c] = *v;
                any_positive = any_positive || *v > 0.0;
            }
        }
        if (scores_ok && !any_positive) {
            add(issues, file, row.line, "all scores are zero");
            scores_ok = false;
        }
        if (row_ok && scores_ok) {
            table.records.push_back(std::move(rec));
            table.lines.push_back(row.line);
        }
    }

    if (seen_ids)
        for (const auto& [id, line] : first_line) seen_ids->insert(id);
    if (parsed.rows.size() == 1 && issues.size() == baseline)
        add(issues, file, header.line + 1, "no data rows: a dataset needs at least one sample");
    return table;
}

// ---------------------------------------------------------------------------
// features.csv

FeatureTable read_features(std::string_view text, const std::unordered_set<std::string>& known,
                           std::string_view file, IssueList& issues) {
    FeatureTable table;
    const std::size_t baseline = issues.size();
    const auto parsed = csv::parse(text);
    if (parsed.unterminated_quote_line)
        add(issues, file, *parsed.unterminated_quote_line, "unterminated quoted field");
    if (parsed.rows.empty()) {
        add(issues, file, 1, "missing header row");
        return table;
    }
    const auto& header = parsed.rows.front();
    if (header.fields.empty() || header.fields.front() != "id") {
        add(issues, file, header.line, "first header column must be 'id'");
        return table;
    }
    {
        std::unordered_set<std::string> seen{"id"};
        for (std::size_t i = 1; i < header.fields.size(); ++i) {
            const auto& name = header.fields[i];
            if (name.empty()) add(issues, file, header.line, "empty feature name");
            else if (!seen.insert(name).second)
                add(issues, file, header.line, "duplicate header column '" + name + "'");
            table.names.push_back(name);
        }
    }
    if (issues.size() != baseline) return table;

    const std::size_t f = table.names.size();
    std::unordered_map<std::string, std::size_t> first_line;
    for (std::size_t r = 1; r < parsed.rows.size(); ++r) {
        const auto& row = parsed.rows[r];
        if (row.fields.size() != f + 1) {
            add(issues, file, row.line,
                "expected " + std::to_string(f + 1) + " fields, got " +
                    std::to_string(row.fields.size()));
            continue;
        }
        const std::string& id = row.fields.front();
        if (!known.contains(id)) {
            add(issues, file, row.line, "unknown sample id '" + id + "'");
            continue;
        }
        if (auto [it, inserted] = first_line.emplace(id, row.line); !inserted) {
            add(issues, file, row.line,
                "duplicate sample id '" + id + "' (first seen on line " +
                    std::to_string(it->second) + ")");
            continue;
        }
        std::vector<FeatureValue> values(f);
        bool ok = true;
        for (std::size_t j = 0; j < f; ++j) {
            const std::string& cell = row.fields[j + 1];
            if (cell.find_first_not_of(" \t") == std::string::npos) continue;
            auto v = csv::parse_number(cell);
            if (!v) {
                add(issues, file, row.line,
                    "non-numeric value '" + cell + "' for feature '" + table.names[j] + "'");
                ok = false;
            } else if (!std::isfinite(*v)) {
                add(issues, file, row.line,
                    "non-finite value for feature '" + table.names[j] + "'");
                ok = false;
            } else {
                values[j] = *v;
            }
        }
        if (ok) table.values.emplace(id, std::move(values));
    }
    return table;
}

[[noreturn]] void manifest_error(std::string_view file, std::string message) {
    throw LoadError({Issue{std::string(file), 0, std::move(message)}});
}

std::optional<std::string> find_image(const fs::path& dir, const std::string& sample_id) {
    if (sample_id == "." || sample_id == ".." ||
        sample_id.find_first_of("/\\") != std::string::npos)
        return std::nullopt;
    for (const char* ext : {".png", ".jpg"}) {
        fs::path candidate = dir / (sample_id + ext);
        std::error_code ec;
        if (fs::is_regular_file(candidate, ec)) return candidate.string();
    }
    return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

std::string BundleManifest::to_json() const {
    nlohmann::ordered_json j;
    j["format_version"] = format_version;
    j["classes"] = classes;
    j["features"] = features;
    j["normalized"] = normalized;
    j["has_images"] = has_images;
    j["predictions"] = predictions;
    if (features_file) j["features_file"] = *features_file;
    if (images_dir) j["images_dir"] = *images_dir;
    return j.dump(2) + "\n";
}

BundleManifest BundleManifest::from_json(std::string_view text, std::string_view file_label) {
    auto fail = [&](std::string msg) { manifest_error(file_label, std::move(msg)); };

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail("manifest must be a JSON object");

    BundleManifest m;
    auto string_field = [&](const char* key, bool required) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end()) {
            if (required) fail(std::string("missing field '") + key + "'");
            return std::nullopt;
        }
        if (!it->is_string()) fail(std::string("field '") + key + "' must be a string");
        return it->get<std::string>();
    };
    auto string_list = [&](const char* key, bool required) {
        std::vector<std::string> out;
        auto it = j.find(key);
        if (it == j.end()) {
            if (required) fail(std::string("missing field '") + key + "'");
            return out;
        }
        if (!it->is_array()) fail(std::string("field '") + key + "' must be an array of strings");
        for (const auto& v : *it) {
            if (!v.is_string()) fail(std::string("field '") + key + "' must be an array of strings");
            out.push_back(v.get<std::string>());
        }
        return out;
    };
    auto bool_field = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end()) return false;
        if (!it->is_boolean()) fail(std::string("field '") + key + "' must be a boolean");
        return it->get<bool>();
    };

    m.format_version = *string_field("format_version", true);
    if (m.format_version != kBundleFormatVersion)
        fail("unsupported format_version '" + m.format_version + "' (expected '" +
             std::string(kBundleFormatVersion) + "')");
    m.classes = string_list("classes", true);
    m.features = string_list("features", false);
    m.normalized = bool_field("normalized");
    m.has_images = bool_field("has_images");
    if (auto p = string_field("predictions", false)) m.predictions = *p;
    m.features_file = string_field("features_file", false);
    m.images_dir = string_field("images_dir", false);
    return m;
}

// ---------------------------------------------------------------------------
// Parsing entry points

PredictionTable parse_predictions(std::string_view text, std::string_view file_label) {
    IssueList issues;
    auto table = read_predictions(text, file_label, issues);
    if (!issues.empty()) throw LoadError(std::move(issues));
    return table;
}

PredictionTable parse_predictions(std::istream& in, std::string_view file_label) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_predictions(buf.str(), file_label);
}

FeatureTable parse_features(std::string_view text, const std::unordered_set<std::string>& known_ids,
                            std::string_view file_label) {
    IssueList issues;
    auto table = read_features(text, known_ids, file_label, issues);
    if (!issues.empty()) throw LoadError(std::move(issues));
    return table;
}

// ---------------------------------------------------------------------------
// Bundles

LoadedBundle load_bundle(const fs::path& manifest_path, const LoadOptions& options) {
    std::error_code ec;
    const fs::path manifest_file =
        fs::is_directory(manifest_path, ec) ? manifest_path / "manifest.json" : manifest_path;
    const fs::path root = manifest_file.parent_path();
    const std::string manifest_label = manifest_file.filename().string();

    BundleManifest manifest = BundleManifest::from_json(read_file(manifest_file), manifest_label);

    IssueList issues;
    const std::string pred_label = manifest.predictions;
    std::unordered_set<std::string> ids;
    PredictionTable preds =
        read_predictions(read_file(root / manifest.predictions), pred_label, issues, &ids);

    if (!preds.class_names.empty() && preds.class_names != manifest.classes)
        add(issues, manifest_label, 0,
            "manifest classes do not match the score columns of " + pred_label);

    std::optional<FeatureTable> features;
    if (manifest.features_file) {
        const std::string feat_label = *manifest.features_file;
        features = read_features(read_file(root / *manifest.features_file), ids, feat_label, issues);
        if (features->names != manifest.features)
            add(issues, manifest_label, 0,
                "manifest features do not match the header of " + feat_label);
    } else if (!manifest.features.empty()) {
        add(issues, manifest_label, 0, "features are listed but no features_file is given");
    }

    if (!issues.empty()) throw LoadError(std::move(issues));

    DatasetParts parts;
    parts.class_names = preds.class_names;
    parts.normalized = manifest.normalized;
    if (features) parts.feature_names = features->names;
    const fs::path images = root / manifest.images_dir.value_or("images");
    for (auto& rec : preds.records) {
        if (features)
            if (auto it = features->values.find(rec.sample_id); it != features->values.end())
                rec.features = it->second;
        if (manifest.has_images) rec.image_ref = find_image(images, rec.sample_id);
    }
    parts.records = std::move(preds.records);

    // Row-level checks already ran during parsing; this catches whatever
    // only makes sense on the assembled dataset.
    std::unordered_map<std::string_view, std::size_t> line_of;
    for (std::size_t i = 0; i < parts.records.size(); ++i)
        line_of.emplace(parts.records[i].sample_id, preds.lines[i]);
    auto located = [&](const Violation& v) {
        auto it = line_of.find(v.sample_id);
        const std::size_t line = it == line_of.end() ? 0 : it->second;
        return Issue{line ? pred_label : manifest_label, line, v.message};
    };
    ValidationReport report = validate_dataset(parts);
    for (const auto& v : report.violations) issues.push_back(located(v));
    if (!issues.empty()) throw LoadError(std::move(issues));
    std::vector<Issue> warnings;
    for (const auto& w : report.warnings) warnings.push_back(located(w));

    // A normalized manifest only repairs the rows that were warned about, so
    // that rewriting a loaded bundle reproduces it exactly.
    if (options.normalize) {
        for (auto& rec : parts.records) rec = normalize_scores(rec);
        parts.normalized = true;
    } else if (manifest.normalized) {
        std::unordered_set<std::string_view> off;
        for (const auto& w : report.warnings) off.insert(w.sample_id);
        for (auto& rec : parts.records)
            if (off.contains(rec.sample_id)) rec = normalize_scores(rec);
    }
    return LoadedBundle{Dataset::build(std::move(parts)), std::move(manifest), std::move(warnings)};
}

BundleText serialize_bundle(const Dataset& dataset) {
    BundleText text;
    BundleManifest m;
    for (const auto& c : dataset.classes()) m.classes.push_back(c.name);
    m.features.assign(dataset.feature_names().begin(), dataset.feature_names().end());
    m.normalized = dataset.normalized();
    m.has_images = dataset.has_images();
    if (dataset.feature_count() > 0) m.features_file = "features.csv";
    if (m.has_images) m.images_dir = "images";
    text.manifest = m.to_json();

    std::vector<std::string> fields{"id", "actual"};
    for (const auto& c : dataset.classes()) fields.push_back(std::string(kScorePrefix) + c.name);
    csv::append_row(text.predictions, fields);
    for (const auto& r : dataset.records()) {
        fields.clear();
        fields.push_back(r.sample_id);
        fields.push_back(dataset.classes()[r.actual].name);
        for (double s : r.scores) fields.push_back(csv::format_number(s));
        csv::append_row(text.predictions, fields);
    }

    if (dataset.feature_count() > 0) {
        std::string out;
        fields.assign({"id"});
        fields.insert(fields.end(), dataset.feature_names().begin(), dataset.feature_names().end());
        csv::append_row(out, fields);
        for (const auto& r : dataset.records()) {
            fields.clear();
            fields.push_back(r.sample_id);
            for (const auto& v : r.features) fields.push_back(v ? csv::format_number(*v) : "");
            csv::append_row(out, fields);
        }
        text.features = std::move(out);
    }
    return text;
}

BundleManifest write_bundle(const Dataset& dataset, const fs::path& directory) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());

    const BundleText text = serialize_bundle(dataset);
    write_file(directory / "manifest.json", text.manifest);
    write_file(directory / "predictions.csv", text.predictions);
    if (text.features) write_file(directory / "features.csv", *text.features);

    BundleManifest manifest = BundleManifest::from_json(text.manifest, "manifest.json");
    if (manifest.images_dir) {
        const fs::path images = directory / *manifest.images_dir;
        fs::create_directories(images, ec);
        if (ec) throw IoError("cannot create " + images.string() + ": " + ec.message());
        for (const auto& r : dataset.records()) {
            if (!r.image_ref) continue;
            const fs::path source(*r.image_ref);
            const fs::path target = images / (r.sample_id + source.extension().string());
            if (fs::exists(target, ec) && fs::equivalent(source, target, ec)) continue;
            fs::copy_file(source, target, fs::copy_options::overwrite_existing, ec);
            if (ec) throw IoError("cannot copy image " + source.string() + ": " + ec.message());
        }
    }
    return manifest;
}

}  // namespace classilist
