#include "classilist/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "classilist/error.hpp"

namespace classilist {

namespace {

constexpr std::size_t kMaxBins = 100000;

void check_class(const Dataset& dataset, ClassIndex c) {
    if (c >= dataset.class_count())
        throw RangeError("class index " + std::to_string(c) + " out of range [0, " +
                         std::to_string(dataset.class_count()) + ")");
}

}  // namespace

// ---------------------------------------------------------------------------
// HistogramSpec

void HistogramSpec::validate() const {
    if (bin_count < 1) throw SpecError("bin count must be at least 1");
    if (bin_count > kMaxBins)
        throw SpecError("bin count must not exceed " + std::to_string(kMaxBins));
    if (!std::isfinite(axis_lo) || !std::isfinite(axis_hi))
        throw SpecError("axis bounds must be finite");
    if (!(axis_lo < axis_hi)) throw SpecError("axis lower bound must be below the upper bound");
    if (!std::isfinite(tn_min) || !(tn_min > 0.0))
        throw SpecError("tn_min must be a non-zero lower bound (tn_min > 0)");
    if (!std::isfinite(tp_max) || !(tp_max > 0.0) || tp_max > 1.0)
        throw SpecError("tp_max must lie in (0, 1]");
    if (groups.empty()) throw SpecError("at least one outcome group must be selected");
    const auto e = edges();
    for (std::size_t i = 1; i < e.size(); ++i)
        if (!(e[i - 1] < e[i])) throw SpecError("axis range too narrow for the bin count");
}

std::vector<double> HistogramSpec::edges() const {
    std::vector<double> e(bin_count + 1);
    const double span = axis_hi - axis_lo;
    const auto n = static_cast<double>(bin_count);
    for (std::size_t i = 0; i < bin_count; ++i)
        e[i] = axis_lo + span * static_cast<double>(i) / n;
    e[bin_count] = axis_hi;
    return e;
}

bool HistogramSpec::admits(Outcome o, double score) const noexcept {
    if (!groups.contains(o)) return false;
    if (o == Outcome::TN) return score >= tn_min;
    if (o == Outcome::TP) return score <= tp_max;
    return true;
}

BinPlacement place_score(std::span<const double> edges, double score) noexcept {
    if (score < edges.front()) return {BinPlacement::Side::Below, 0};
    if (score > edges.back()) return {BinPlacement::Side::Above, 0};
    const std::size_t bins = edges.size() - 1;
    if (score == edges.back()) return {BinPlacement::Side::Inside, bins - 1};
    auto interior = edges.subspan(1, bins - 1);
    auto it = std::upper_bound(interior.begin(), interior.end(), score);
    return {BinPlacement::Side::Inside, static_cast<std::size_t>(it - interior.begin())};
}

std::size_t HistogramBin::total() const noexcept {
    std::size_t t = 0;
    for (auto n : counts) t += n;
    return t;
}

std::size_t ClassHistogram::binned_total() const noexcept {
    std::size_t t = 0;
    for (const auto& b : bins) t += b.total();
    return t;
}

// ---------------------------------------------------------------------------
// Histograms

ClassHistogram build_histogram(const Dataset& dataset, ClassIndex c, const HistogramSpec& spec) {
    spec.validate();
    check_class(dataset, c);

    ClassHistogram h;
    h.class_index = c;
    h.spec = spec;
    const auto edges = spec.edges();
    h.bins.resize(spec.bin_count);
    for (std::size_t i = 0; i < spec.bin_count; ++i) {
        h.bins[i].lo = edges[i];
        h.bins[i].hi = edges[i + 1];
    }

    const auto records = dataset.records();
    for (RecordIndex i = 0; i < records.size(); ++i) {
        const double score = records[i].scores[c];
        const Outcome o = outcome_for(records[i].actual, dataset.predicted(i), c);
        if (!spec.admits(o, score)) continue;
        const auto place = place_score(edges, score);
        switch (place.side) {
            case BinPlacement::Side::Below: ++h.excluded_below; break;
            case BinPlacement::Side::Above: ++h.excluded_above; break;
            case BinPlacement::Side::Inside: {
                auto& bin = h.bins[place.bin];
                ++bin.counts[outcome_slot(o)];
                bin.members[outcome_slot(o)].push_back(i);
                break;
            }
        }
    }
    return h;
}

std::vector<ClassHistogram> build_all_histograms(const Dataset& dataset,
                                                 const HistogramSpec& spec) {
    spec.validate();
    std::vector<ClassHistogram> out;
    out.reserve(dataset.class_count());
    for (ClassIndex c = 0; c < dataset.class_count(); ++c)
        out.push_back(build_histogram(dataset, c, spec));
    return out;
}

std::pair<double, double> effective_range(const Dataset& dataset, ClassIndex c,
                                          const HistogramSpec& spec) {
    spec.validate();
    check_class(dataset, c);
    std::optional<std::pair<double, double>> range;
    const auto records = dataset.records();
    for (RecordIndex i = 0; i < records.size(); ++i) {
        const double score = records[i].scores[c];
        if (!spec.admits(outcome_for(records[i].actual, dataset.predicted(i), c), score)) continue;
        if (!range) range.emplace(score, score);
        else {
            range->first = std::min(range->first, score);
            range->second = std::max(range->second, score);
        }
    }
    if (!range)
        throw EmptySelectionError("no sample of class '" +
                                  std::string(dataset.classes()[c].name) +
                                  "' passes the group filter");
    return *range;
}

// ---------------------------------------------------------------------------
// Confusion matrix

ConfusionMatrix::ConfusionMatrix(std::size_t class_count)
    : k_(class_count), cells_(class_count * class_count) {}

std::size_t ConfusionMatrix::slot(ClassIndex actual, ClassIndex predicted) const {
    if (actual >= k_ || predicted >= k_)
        throw RangeError("confusion cell (" + std::to_string(actual) + ", " +
                         std::to_string(predicted) + ") out of range for " +
                         std::to_string(k_) + " classes");
    return actual * k_ + predicted;
}

std::size_t ConfusionMatrix::count(ClassIndex actual, ClassIndex predicted) const {
    return cells_[slot(actual, predicted)].size();
}

const std::vector<RecordIndex>& ConfusionMatrix::members(ClassIndex actual,
                                                         ClassIndex predicted) const {
    return cells_[slot(actual, predicted)];
}

void ConfusionMatrix::add(ClassIndex actual, ClassIndex predicted, RecordIndex record) {
    cells_[slot(actual, predicted)].push_back(record);
}

std::size_t ConfusionMatrix::row_sum(ClassIndex actual) const {
    std::size_t s = 0;
    for (ClassIndex p = 0; p < k_; ++p) s += count(actual, p);
    return s;
}

std::size_t ConfusionMatrix::column_sum(ClassIndex predicted) const {
    std::size_t s = 0;
    for (ClassIndex t = 0; t < k_; ++t) s += count(t, predicted);
    return s;
}

std::size_t ConfusionMatrix::total() const noexcept {
    std::size_t s = 0;
    for (const auto& cell : cells_) s += cell.size();
    return s;
}

ConfusionMatrix confusion_matrix(const Dataset& dataset) {
    ConfusionMatrix m(dataset.class_count());
    const auto records = dataset.records();
    for (RecordIndex i = 0; i < records.size(); ++i)
        m.add(records[i].actual, dataset.predicted(i), i);
    return m;
}

std::vector<ClassOutcomeCounts> per_class_counts(const Dataset& dataset) {
    // Every record is TN for all classes except its actual and predicted one.
    const std::size_t k = dataset.class_count();
    std::vector<ClassOutcomeCounts> out(k);
    const auto records = dataset.records();
    for (RecordIndex i = 0; i < records.size(); ++i) {
        const ClassIndex t = records[i].actual;
        const ClassIndex p = dataset.predicted(i);
        if (t == p) ++out[t].tp;
        else {
            ++out[p].fp;
            ++out[t].fn;
        }
    }
    for (auto& c : out) c.tn = records.size() - c.tp - c.fp - c.fn;
    return out;
}

// ---------------------------------------------------------------------------
// Feature summaries

double interpolated_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw EmptySelectionError("quantile of an empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto below = static_cast<std::size_t>(std::floor(pos));
    const std::size_t above = std::min(below + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(below);
    return sorted[below] + frac * (sorted[above] - sorted[below]);
}

FeatureSummary feature_summary(const Dataset& dataset, std::span<const RecordIndex> records) {
    FeatureSummary out;
    out.features.resize(dataset.feature_count());
    std::vector<double> values;
    values.reserve(records.size());
    for (std::size_t f = 0; f < dataset.feature_count(); ++f) {
        values.clear();
        for (RecordIndex r : records)
            if (const auto& v = dataset.record(r).features[f]) values.push_back(*v);
        auto& stats = out.features[f];
        stats.count = values.size();
        if (values.empty()) continue;
        std::sort(values.begin(), values.end());
        stats.summary = FiveNumberSummary{values.front(), interpolated_quantile(values, 0.25),
                                          interpolated_quantile(values, 0.5),
                                          interpolated_quantile(values, 0.75), values.back()};
    }
    return out;
}

FeatureSummary feature_summary(const Dataset& dataset, std::span<const std::string> sample_ids) {
    std::vector<RecordIndex> records;
    records.reserve(sample_ids.size());
    for (const auto& id : sample_ids) records.push_back(dataset.index_of(id));
    return feature_summary(dataset, records);
}

// ---------------------------------------------------------------------------
// Linked selection

namespace {

const ClassHistogram& histogram_for(std::span<const ClassHistogram> histograms, ClassIndex c) {
    for (const auto& h : histograms)
        if (h.class_index == c) return h;
    throw RangeError("no histogram for class index " + std::to_string(c));
}

}  // namespace

SelectionResult resolve_selection(const Dataset& dataset,
                                  std::span<const ClassHistogram> histograms,
                                  std::vector<RecordIndex> records) {
    SelectionResult result;
    result.records = std::move(records);
    if (result.records.empty()) return result;

    std::vector<char> selected(dataset.size(), 0);
    for (RecordIndex r : result.records) {
        if (r >= dataset.size()) throw RangeError("record index out of range");
        selected[r] = 1;
    }

    for (const auto& h : histograms) {
        for (std::size_t b = 0; b < h.bins.size(); ++b) {
            for (Outcome o : kAllOutcomes) {
                std::size_t n = 0;
                for (RecordIndex r : h.bins[b].members_of(o)) n += selected[r];
                if (n > 0) result.highlights[h.class_index][b][o] = n;
            }
        }
    }

    for (RecordIndex r : result.records) {
        CellRef cell{dataset.record(r).actual, dataset.predicted(r)};
        if (std::find(result.cells.begin(), result.cells.end(), cell) == result.cells.end())
            result.cells.push_back(cell);
    }
    return result;
}

SelectionResult select_bar(const Dataset& dataset, std::span<const ClassHistogram> histograms,
                           ClassIndex c, std::size_t bin, std::optional<Outcome> group) {
    check_class(dataset, c);
    const auto& h = histogram_for(histograms, c);
    if (bin >= h.bins.size())
        throw RangeError("bin index " + std::to_string(bin) + " out of range [0, " +
                         std::to_string(h.bins.size()) + ")");
    const auto& b = h.bins[bin];

    std::vector<RecordIndex> records;
    if (group) {
        records = b.members_of(*group);
    } else {
        for (const auto& m : b.members) records.insert(records.end(), m.begin(), m.end());
        std::sort(records.begin(), records.end());
    }
    return resolve_selection(dataset, histograms, std::move(records));
}

SelectionResult select_cell(const Dataset& dataset, std::span<const ClassHistogram> histograms,
                            ClassIndex actual, ClassIndex predicted) {
    check_class(dataset, actual);
    check_class(dataset, predicted);
    std::vector<RecordIndex> records;
    const auto all = dataset.records();
    for (RecordIndex i = 0; i < all.size(); ++i)
        if (all[i].actual == actual && dataset.predicted(i) == predicted) records.push_back(i);
    auto result = resolve_selection(dataset, histograms, std::move(records));
    result.cells = {CellRef{actual, predicted}};
    return result;
}

// ---------------------------------------------------------------------------
// What-if reweighting

namespace {

// Products are compared exactly as double-double pairs (fma residual), so a
// rounded product can never merge two distinct scores into a false tie.
struct ExactProduct {
    double hi;
    double lo;
};

ExactProduct exact_product(double a, double b) noexcept {
    const double hi = a * b;
    return {hi, std::fma(a, b, -hi)};
}

bool greater(ExactProduct x, ExactProduct y) noexcept {
    return x.hi > y.hi || (x.hi == y.hi && x.lo > y.lo);
}

ClassIndex reweighted_argmax(std::span<const double> scores, std::span<const double> weights) {
    ClassIndex best = 0;
    ExactProduct best_value = exact_product(scores[0], weights[0]);
    for (ClassIndex c = 1; c < scores.size(); ++c) {
        const auto v = exact_product(scores[c], weights[c]);
        if (greater(v, best_value)) {
            best = c;
            best_value = v;
        }
    }
    return best;
}

}  // namespace

WhatIfReport reweight_whatif(const Dataset& dataset, std::span<const double> weights) {
    const std::size_t k = dataset.class_count();
    if (weights.size() != k)
        throw WeightError("expected " + std::to_string(k) + " weights, got " +
                          std::to_string(weights.size()));
    for (std::size_t i = 0; i < k; ++i)
        if (!std::isfinite(weights[i]) || !(weights[i] > 0.0))
            throw WeightError("weight for class '" + dataset.classes()[i].name +
                              "' must be a positive finite number");

    WhatIfReport report{{weights.begin(), weights.end()}, ConfusionMatrix(k), ConfusionMatrix(k),
                        {}};
    const auto records = dataset.records();
    for (RecordIndex i = 0; i < records.size(); ++i) {
        const ClassIndex before = dataset.predicted(i);
        const ClassIndex after = reweighted_argmax(records[i].scores, weights);
        report.before.add(records[i].actual, before, i);
        report.after.add(records[i].actual, after, i);
        if (before != after) report.changed.push_back({i, before, after});
    }
    return report;
}

}  // namespace classilist
