#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "classilist/error.hpp"
#include "classilist/model.hpp"

namespace classilist {

inline constexpr std::string_view kBundleFormatVersion = "1";
inline constexpr std::string_view kScorePrefix = "score:";

/// Contents of manifest.json.
struct BundleManifest {
    std::string format_version{kBundleFormatVersion};
    std::vector<std::string> classes;
    std::vector<std::string> features;
    bool normalized = false;
    bool has_images = false;
    std::string predictions = "predictions.csv";
    std::optional<std::string> features_file;
    std::optional<std::string> images_dir;

    /// Pretty-printed JSON with keys in the documented order, LF terminated.
    std::string to_json() const;
    /// Throws LoadError on malformed documents.
    static BundleManifest from_json(std::string_view text, std::string_view file_label);

    friend bool operator==(const BundleManifest&, const BundleManifest&) = default;
};

struct PredictionTable {
    std::vector<std::string> class_names;
    std::vector<PredictionRecord> records;
    /// Source line of each record, parallel to `records`.
    std::vector<std::size_t> lines;
};

struct FeatureTable {
    std::vector<std::string> names;
    std::unordered_map<std::string, std::vector<FeatureValue>> values;
};

/// Parses predictions CSV text. Throws LoadError carrying every problem
/// with its source line.
PredictionTable parse_predictions(std::string_view text,
                                  std::string_view file_label = "predictions.csv");
PredictionTable parse_predictions(std::istream& in,
                                  std::string_view file_label = "predictions.csv");

/// Parses features CSV text; every id must be in `known_ids`.
FeatureTable parse_features(std::string_view text, const std::unordered_set<std::string>& known_ids,
                            std::string_view file_label = "features.csv");

struct LoadOptions {
    /// Row-normalize scores even when the manifest does not ask for it.
    bool normalize = false;
};

struct LoadedBundle {
    Dataset dataset;
    BundleManifest manifest;
    std::vector<Issue> warnings;
};

/// Loads a bundle from its manifest path or from the directory holding
/// manifest.json. Throws IoError when files cannot be read and LoadError
/// (listing every problem) when the contents are invalid.
LoadedBundle load_bundle(const std::filesystem::path& manifest_path, const LoadOptions& options = {});

/// Writes manifest.json, predictions.csv, features.csv (when F > 0) and
/// copies referenced images into `directory`. Output is deterministic.
BundleManifest write_bundle(const Dataset& dataset, const std::filesystem::path& directory);

/// Files written by write_bundle, as text, keyed by file name.
struct BundleText {
    std::string manifest;
    std::string predictions;
    std::optional<std::string> features;
};
BundleText serialize_bundle(const Dataset& dataset);

}  // namespace classilist
