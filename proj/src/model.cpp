#include "classilist/model.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "classilist/error.hpp"

namespace classilist {

std::string_view outcome_name(Outcome o) noexcept {
    switch (o) {
        case Outcome::TP: return "tp";
        case Outcome::FP: return "fp";
        case Outcome::FN: return "fn";
        case Outcome::TN: return "tn";
    }
    return "?";
}

std::optional<Outcome> parse_outcome(std::string_view name) noexcept {
    for (Outcome o : kAllOutcomes) {
        std::string_view n = outcome_name(o);
        if (name.size() != n.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < n.size(); ++i) {
            char c = name[i];
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            if (c != n[i]) {
                same = false;
                break;
            }
        }
        if (same) return o;
    }
    return std::nullopt;
}

std::vector<Outcome> OutcomeSet::members() const {
    std::vector<Outcome> out;
    for (Outcome o : kAllOutcomes)
        if (contains(o)) out.push_back(o);
    return out;
}

ClassIndex predicted_class(std::span<const double> scores) {
    ClassIndex best = 0;
    for (ClassIndex i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

Outcome outcome_for(ClassIndex actual, ClassIndex predicted, ClassIndex c) noexcept {
    if (predicted == c) return actual == c ? Outcome::TP : Outcome::FP;
    return actual == c ? Outcome::FN : Outcome::TN;
}

Outcome outcome(const PredictionRecord& record, ClassIndex c) {
    if (c >= record.scores.size())
        throw RangeError("class index " + std::to_string(c) + " out of range [0, " +
                         std::to_string(record.scores.size()) + ")");
    return outcome_for(record.actual, predicted_class(record), c);
}

PredictionRecord normalize_scores(const PredictionRecord& record) {
    double sum = 0.0;
    for (double s : record.scores) sum += s;
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw DegenerateRowError("cannot normalize score row of sample '" + record.sample_id +
                                 "': row sum is not positive");
    PredictionRecord out = record;
    for (double& s : out.scores) s /= sum;
    return out;
}

std::string_view violation_kind_name(ViolationKind kind) noexcept {
    switch (kind) {
        case ViolationKind::DuplicateId: return "duplicate-id";
        case ViolationKind::EmptyId: return "empty-id";
        case ViolationKind::ScoreLengthMismatch: return "score-length-mismatch";
        case ViolationKind::NegativeScore: return "negative-score";
        case ViolationKind::NonFiniteValue: return "non-finite-value";
        case ViolationKind::AllZeroRow: return "all-zero-row";
        case ViolationKind::ActualOutOfRange: return "actual-out-of-range";
        case ViolationKind::FeatureLengthMismatch: return "feature-length-mismatch";
        case ViolationKind::TooFewClasses: return "too-few-classes";
        case ViolationKind::DuplicateClassName: return "duplicate-class-name";
        case ViolationKind::EmptyClassName: return "empty-class-name";
        case ViolationKind::NoRecords: return "no-records";
        case ViolationKind::RowSumNotOne: return "row-sum-not-one";
    }
    return "unknown";
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ValidationReport validate_dataset(const DatasetParts& parts) {
    ValidationReport report;
    auto violation = [&](ViolationKind kind, const std::string& id, std::string msg) {
        report.violations.push_back({kind, id, std::move(msg)});
    };

    const std::size_t k = parts.class_names.size();
    const std::size_t f = parts.feature_names.size();

    if (k < 2)
        violation(ViolationKind::TooFewClasses, {},
                  "dataset needs at least 2 classes, got " + std::to_string(k));
    {
        std::unordered_set<std::string> seen;
        for (const auto& name : parts.class_names) {
            if (name.empty())
                violation(ViolationKind::EmptyClassName, {}, "class name is empty");
            else if (!seen.insert(name).second)
                violation(ViolationKind::DuplicateClassName, {},
                          "class name '" + name + "' appears more than once");
        }
    }
    if (parts.records.empty()) violation(ViolationKind::NoRecords, {}, "dataset has no records");

    std::unordered_set<std::string_view> ids;
    for (const auto& r : parts.records) {
        const std::string& id = r.sample_id;
        if (id.empty()) violation(ViolationKind::EmptyId, id, "sample id is empty");
        else if (!ids.insert(id).second)
            violation(ViolationKind::DuplicateId, id, "duplicate sample id '" + id + "'");

        if (r.actual >= k)
            violation(ViolationKind::ActualOutOfRange, id,
                      "actual class index " + std::to_string(r.actual) + " out of range");

        if (r.scores.size() != k) {
            violation(ViolationKind::ScoreLengthMismatch, id,
                      "expected " + std::to_string(k) + " scores, got " +
                          std::to_string(r.scores.size()));
        } else {
            bool any_positive = false;
            bool all_finite = true;
            for (std::size_t c = 0; c < k; ++c) {
                double s = r.scores[c];
                if (!std::isfinite(s)) {
                    all_finite = false;
                    violation(ViolationKind::NonFiniteValue, id,
                              "non-finite score for class '" + parts.class_names[c] + "'");
                } else if (s < 0.0) {
                    violation(ViolationKind::NegativeScore, id,
                              "negative score " + fmt_double(s) + " for class '" +
                                  parts.class_names[c] + "'");
                } else if (s > 0.0) {
                    any_positive = true;
                }
            }
            if (all_finite && !any_positive)
                violation(ViolationKind::AllZeroRow, id, "all scores are zero");

            if (all_finite && any_positive && parts.normalized) {
                double sum = 0.0;
                for (double s : r.scores) sum += s;
                if (std::abs(sum - 1.0) > 1e-6)
                    report.warnings.push_back({ViolationKind::RowSumNotOne, id,
                                               "scores sum to " + fmt_double(sum) +
                                                   " although the dataset is marked normalized"});
            }
        }

        if (!r.features.empty() && r.features.size() != f) {
            violation(ViolationKind::FeatureLengthMismatch, id,
                      "expected " + std::to_string(f) + " features, got " +
                          std::to_string(r.features.size()));
        } else {
            for (std::size_t j = 0; j < r.features.size(); ++j)
                if (r.features[j] && !std::isfinite(*r.features[j]))
                    violation(ViolationKind::NonFiniteValue, id,
                              "non-finite value for feature '" + parts.feature_names[j] + "'");
        }
    }
    return report;
}

Dataset Dataset::build(DatasetParts parts) {
    ValidationReport report = validate_dataset(parts);
    if (!report.ok()) {
        std::vector<Issue> issues;
        for (const auto& v : report.violations) {
            std::string msg = v.sample_id.empty() ? v.message
                                                  : "sample '" + v.sample_id + "': " + v.message;
            issues.push_back({{}, 0, std::move(msg)});
        }
        throw LoadError(std::move(issues));
    }

    Dataset d;
    d.classes_.reserve(parts.class_names.size());
    for (ClassIndex i = 0; i < parts.class_names.size(); ++i)
        d.classes_.push_back({std::move(parts.class_names[i]), i});
    d.feature_names_ = std::move(parts.feature_names);
    d.normalized_ = parts.normalized;
    d.records_ = std::move(parts.records);
    d.predicted_.reserve(d.records_.size());
    d.by_id_.reserve(d.records_.size());
    for (RecordIndex i = 0; i < d.records_.size(); ++i) {
        auto& r = d.records_[i];
        if (r.features.empty() && !d.feature_names_.empty())
            r.features.assign(d.feature_names_.size(), std::nullopt);
        d.predicted_.push_back(predicted_class(r));
        d.by_id_.emplace(r.sample_id, i);
    }
    return d;
}

bool Dataset::has_images() const noexcept {
    for (const auto& r : records_)
        if (r.image_ref) return true;
    return false;
}

std::optional<RecordIndex> Dataset::find(std::string_view sample_id) const {
    auto it = by_id_.find(std::string(sample_id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

RecordIndex Dataset::index_of(std::string_view sample_id) const {
    if (auto i = find(sample_id)) return *i;
    throw LookupError("unknown sample id '" + std::string(sample_id) + "'");
}

std::optional<ClassIndex> Dataset::find_class(std::string_view name) const {
    for (const auto& c : classes_)
        if (c.name == name) return c.index;
    return std::nullopt;
}

DatasetParts Dataset::parts() const {
    DatasetParts p;
    for (const auto& c : classes_) p.class_names.push_back(c.name);
    p.feature_names = feature_names_;
    p.records = records_;
    p.normalized = normalized_;
    return p;
}

bool operator==(const Dataset& a, const Dataset& b) {
    if (a.classes_.size() != b.classes_.size()) return false;
    for (std::size_t i = 0; i < a.classes_.size(); ++i)
        if (a.classes_[i].name != b.classes_[i].name) return false;
    return a.feature_names_ == b.feature_names_ && a.records_ == b.records_ &&
           a.normalized_ == b.normalized_;
}

}  // namespace classilist
