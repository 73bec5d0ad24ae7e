#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace classilist {

using ClassIndex = std::size_t;
using RecordIndex = std::size_t;

struct ClassLabel {
    std::string name;
    ClassIndex index = 0;
};

/// Per-class outcome of a single prediction. The numeric order is also the
/// stacking order used by every view.
enum class Outcome : std::uint8_t { TP = 0, FP = 1, FN = 2, TN = 3 };

inline constexpr std::array<Outcome, 4> kAllOutcomes{Outcome::TP, Outcome::FP, Outcome::FN,
                                                     Outcome::TN};

/// Lower-case wire name ("tp", "fp", "fn", "tn").
std::string_view outcome_name(Outcome o) noexcept;
std::optional<Outcome> parse_outcome(std::string_view name) noexcept;

constexpr std::size_t outcome_slot(Outcome o) noexcept { return static_cast<std::size_t>(o); }

/// Small value set of outcome groups.
class OutcomeSet {
public:
    constexpr OutcomeSet() = default;
    constexpr OutcomeSet(std::initializer_list<Outcome> outcomes) {
        for (Outcome o : outcomes) insert(o);
    }

    constexpr void insert(Outcome o) noexcept { bits_ |= bit(o); }
    constexpr void erase(Outcome o) noexcept { bits_ &= static_cast<std::uint8_t>(~bit(o)); }
    constexpr bool contains(Outcome o) const noexcept { return (bits_ & bit(o)) != 0; }
    constexpr bool empty() const noexcept { return bits_ == 0; }

    /// Members in stacking order.
    std::vector<Outcome> members() const;

    friend constexpr bool operator==(OutcomeSet, OutcomeSet) = default;

private:
    static constexpr std::uint8_t bit(Outcome o) noexcept {
        return static_cast<std::uint8_t>(1u << outcome_slot(o));
    }
    std::uint8_t bits_ = 0;
};

/// Feature value; std::nullopt marks a missing entry.
using FeatureValue = std::optional<double>;

struct PredictionRecord {
    std::string sample_id;
    ClassIndex actual = 0;
    std::vector<double> scores;
    /// Empty when the dataset has no features, otherwise exactly F entries.
    std::vector<FeatureValue> features;
    std::optional<std::string> image_ref;

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// Index of the highest score; ties go to the lowest class index.
ClassIndex predicted_class(std::span<const double> scores);
inline ClassIndex predicted_class(const PredictionRecord& record) {
    return predicted_class(record.scores);
}

/// Throws RangeError when c is not a valid index into the record's scores.
Outcome outcome(const PredictionRecord& record, ClassIndex c);
Outcome outcome_for(ClassIndex actual, ClassIndex predicted, ClassIndex c) noexcept;

/// Divides every score by the row sum. Throws DegenerateRowError when the row
/// sum is not positive.
PredictionRecord normalize_scores(const PredictionRecord& record);

enum class ViolationKind {
    DuplicateId,
    EmptyId,
    ScoreLengthMismatch,
    NegativeScore,
    NonFiniteValue,
    AllZeroRow,
    ActualOutOfRange,
    FeatureLengthMismatch,
    TooFewClasses,
    DuplicateClassName,
    EmptyClassName,
    NoRecords,
    RowSumNotOne,
};

std::string_view violation_kind_name(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    /// Offending sample, empty for dataset-level problems.
    std::string sample_id;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::vector<Violation> warnings;

    bool ok() const noexcept { return violations.empty(); }
};

/// Unvalidated dataset contents, as assembled by a loader or a test.
struct DatasetParts {
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;
    std::vector<PredictionRecord> records;
    bool normalized = false;
};

ValidationReport validate_dataset(const DatasetParts& parts);

/// Immutable, validated collection of prediction records.
class Dataset {
public:
    /// Validates `parts` and throws LoadError listing every violation.
    /// Records without features get an all-missing vector when F > 0.
    static Dataset build(DatasetParts parts);

    std::span<const ClassLabel> classes() const noexcept { return classes_; }
    std::size_t class_count() const noexcept { return classes_.size(); }
    std::span<const std::string> feature_names() const noexcept { return feature_names_; }
    std::size_t feature_count() const noexcept { return feature_names_.size(); }
    std::span<const PredictionRecord> records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool normalized() const noexcept { return normalized_; }
    bool has_images() const noexcept;

    const PredictionRecord& record(RecordIndex i) const { return records_.at(i); }
    ClassIndex predicted(RecordIndex i) const { return predicted_.at(i); }

    std::optional<RecordIndex> find(std::string_view sample_id) const;
    /// Throws LookupError for unknown ids.
    RecordIndex index_of(std::string_view sample_id) const;

    std::optional<ClassIndex> find_class(std::string_view name) const;

    /// Back to plain parts, e.g. for re-serialization.
    DatasetParts parts() const;

    friend bool operator==(const Dataset& a, const Dataset& b);

private:
    Dataset() = default;

    std::vector<ClassLabel> classes_;
    std::vector<std::string> feature_names_;
    std::vector<PredictionRecord> records_;
    std::vector<ClassIndex> predicted_;
    std::unordered_map<std::string, RecordIndex> by_id_;
    bool normalized_ = false;
};

}  // namespace classilist
