#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "classilist/model.hpp"

namespace classilist {

/// Filter and binning parameters shared by every class histogram in a view.
struct HistogramSpec {
    std::size_t bin_count = 10;
    double axis_lo = 0.0;
    double axis_hi = 1.0;
    OutcomeSet groups{Outcome::TP, Outcome::FP, Outcome::FN};
    /// Lower bound on TN scores; only consulted when TN is in `groups`.
    double tn_min = 0.01;
    /// Upper bound on TP scores.
    double tp_max = 1.0;

    /// Throws SpecError naming the first broken invariant.
    void validate() const;

    /// Bin edges lo = e[0] < e[1] < ... < e[bin_count] = hi.
    std::vector<double> edges() const;

    /// True when a sample with this outcome and score passes the group filter.
    bool admits(Outcome o, double score) const noexcept;

    friend bool operator==(const HistogramSpec&, const HistogramSpec&) = default;
};

/// Where a score lands on an axis.
struct BinPlacement {
    enum class Side { Inside, Below, Above } side = Side::Inside;
    std::size_t bin = 0;
};

/// Half-open bins with a closed last bin: a score equal to an interior edge
/// goes to the upper bin, a score equal to `edges.back()` to the last bin.
BinPlacement place_score(std::span<const double> edges, double score) noexcept;

using OutcomeCounts = std::array<std::size_t, 4>;

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    OutcomeCounts counts{};
    /// Record indices per outcome slot, in dataset order.
    std::array<std::vector<RecordIndex>, 4> members;

    std::size_t count(Outcome o) const noexcept { return counts[outcome_slot(o)]; }
    const std::vector<RecordIndex>& members_of(Outcome o) const noexcept {
        return members[outcome_slot(o)];
    }
    std::size_t total() const noexcept;
};

struct ClassHistogram {
    ClassIndex class_index = 0;
    HistogramSpec spec;
    std::vector<HistogramBin> bins;
    std::size_t excluded_below = 0;
    std::size_t excluded_above = 0;

    /// Samples inside the axis, summed over bins and groups.
    std::size_t binned_total() const noexcept;
};

ClassHistogram build_histogram(const Dataset& dataset, ClassIndex c, const HistogramSpec& spec);
std::vector<ClassHistogram> build_all_histograms(const Dataset& dataset,
                                                 const HistogramSpec& spec);

/// (min, max) of class-c scores over the samples passing the spec's group
/// filter, ignoring the axis bounds. Throws EmptySelectionError when nothing
/// passes.
std::pair<double, double> effective_range(const Dataset& dataset, ClassIndex c,
                                          const HistogramSpec& spec);

/// Rows are actual classes, columns predicted classes.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t class_count = 0);

    std::size_t class_count() const noexcept { return k_; }
    std::size_t count(ClassIndex actual, ClassIndex predicted) const;
    const std::vector<RecordIndex>& members(ClassIndex actual, ClassIndex predicted) const;
    void add(ClassIndex actual, ClassIndex predicted, RecordIndex record);

    std::size_t row_sum(ClassIndex actual) const;
    std::size_t column_sum(ClassIndex predicted) const;
    std::size_t total() const noexcept;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t slot(ClassIndex actual, ClassIndex predicted) const;

    std::size_t k_ = 0;
    std::vector<std::vector<RecordIndex>> cells_;
};

ConfusionMatrix confusion_matrix(const Dataset& dataset);

struct ClassOutcomeCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    friend bool operator==(const ClassOutcomeCounts&, const ClassOutcomeCounts&) = default;
};

std::vector<ClassOutcomeCounts> per_class_counts(const Dataset& dataset);

struct FiveNumberSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

struct FeatureStats {
    std::size_t count = 0;
    /// Absent when count == 0.
    std::optional<FiveNumberSummary> summary;
};

struct FeatureSummary {
    /// One entry per dataset feature, in dataset order.
    std::vector<FeatureStats> features;
};

/// Quantile of sorted values by linear interpolation between closest ranks.
double interpolated_quantile(std::span<const double> sorted, double p);

/// Throws LookupError for unknown ids.
FeatureSummary feature_summary(const Dataset& dataset, std::span<const std::string> sample_ids);
FeatureSummary feature_summary(const Dataset& dataset, std::span<const RecordIndex> records);

struct CellRef {
    ClassIndex actual = 0;
    ClassIndex predicted = 0;
    friend bool operator==(const CellRef&, const CellRef&) = default;
};

/// A resolved brushing action.
struct SelectionResult {
    std::vector<RecordIndex> records;
    /// class index -> bin index -> outcome -> count of selected samples.
    /// Only non-zero counts are stored.
    std::map<ClassIndex, std::map<std::size_t, std::map<Outcome, std::size_t>>> highlights;
    /// Distinct confusion cells touched, in order of first appearance.
    std::vector<CellRef> cells;

    bool empty() const noexcept { return records.empty(); }
};

/// Selection of one histogram bar; `group` restricts it to one outcome
/// segment, otherwise all groups are merged in dataset order.
SelectionResult select_bar(const Dataset& dataset, std::span<const ClassHistogram> histograms,
                           ClassIndex c, std::size_t bin, std::optional<Outcome> group);

SelectionResult select_cell(const Dataset& dataset, std::span<const ClassHistogram> histograms,
                            ClassIndex actual, ClassIndex predicted);

/// Locates an arbitrary set of records in the given histograms.
SelectionResult resolve_selection(const Dataset& dataset,
                                  std::span<const ClassHistogram> histograms,
                                  std::vector<RecordIndex> records);

struct PredictionChange {
    RecordIndex record = 0;
    ClassIndex old_predicted = 0;
    ClassIndex new_predicted = 0;
    friend bool operator==(const PredictionChange&, const PredictionChange&) = default;
};

struct WhatIfReport {
    std::vector<double> weights;
    ConfusionMatrix before;
    ConfusionMatrix after;
    std::vector<PredictionChange> changed;
};

/// Multiplies class-i scores by weights[i] and re-runs the argmax. Throws
/// WeightError for a non-positive, non-finite or wrongly sized weight vector.
WhatIfReport reweight_whatif(const Dataset& dataset, std::span<const double> weights);

}  // namespace classilist
