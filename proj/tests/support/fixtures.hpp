#pragma once

// Shared test datasets: the 6-sample toy set and a seeded random generator.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "classilist/model.hpp"

namespace classilist::testing {

inline DatasetParts t1_parts() {
    DatasetParts p;
    p.class_names = {"A", "B", "C"};
    p.feature_names = {"f1"};
    auto rec = [](std::string id, ClassIndex actual, std::vector<double> scores, double f1) {
        return PredictionRecord{std::move(id), actual, std::move(scores), {f1}, std::nullopt};
    };
    p.records = {
        rec("s1", 0, {0.9, 0.1, 0.0}, 1),
        rec("s2", 0, {0.4, 0.5, 0.1}, 2),
        rec("s3", 1, {0.2, 0.7, 0.1}, 3),
        rec("s4", 2, {0.5, 0.2, 0.3}, 4),
        rec("s5", 2, {0.0, 0.0, 1.0}, 5),
        rec("s6", 1, {0.5, 0.5, 0.0}, 6),
    };
    return p;
}

inline Dataset t1() { return Dataset::build(t1_parts()); }

inline std::filesystem::path t1_bundle_dir() { return CLASSILIST_TEST_DATA "/t1"; }

struct RandomDatasetOptions {
    std::size_t max_records = 1000;
    std::size_t max_classes = 10;
    std::size_t max_features = 3;
    bool normalized = false;
};

/// Scores mix exact tenths (to hit bin edges and ties), zeros and uniform
/// draws; the actual class gets a boost most of the time so that a realistic
/// share of predictions is correct.
inline DatasetParts random_parts(std::uint64_t seed, const RandomDatasetOptions& opt = {}) {
    std::mt19937_64 rng(seed);
    auto uniform_int = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    DatasetParts p;
    const std::size_t k = uniform_int(2, opt.max_classes);
    const std::size_t n = uniform_int(1, opt.max_records);
    const std::size_t f = uniform_int(0, opt.max_features);
    for (std::size_t c = 0; c < k; ++c) p.class_names.push_back("c" + std::to_string(c));
    for (std::size_t j = 0; j < f; ++j) p.feature_names.push_back("feat" + std::to_string(j));
    p.normalized = opt.normalized;

    for (std::size_t i = 0; i < n; ++i) {
        PredictionRecord r;
        r.sample_id = "r" + std::to_string(seed) + "_" + std::to_string(i);
        r.actual = uniform_int(0, k - 1);
        r.scores.resize(k);
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double u = unit(rng);
            double s;
            if (u < 0.15) s = 0.0;
            else if (u < 0.45) s = static_cast<double>(uniform_int(0, 10)) / 10.0;
            else s = unit(rng);
            r.scores[c] = s;
        }
        if (unit(rng) < 0.6) r.scores[r.actual] += unit(rng);
        for (double s : r.scores) sum += s;
        if (sum == 0.0) {
            r.scores[uniform_int(0, k - 1)] = 1.0;
            sum = 1.0;
        }
        if (opt.normalized)
            for (double& s : r.scores) s /= sum;
        for (std::size_t j = 0; j < f; ++j) {
            if (unit(rng) < 0.2) r.features.push_back(std::nullopt);
            else r.features.push_back(std::round((unit(rng) * 200.0 - 100.0) * 1000.0) / 1000.0);
        }
        p.records.push_back(std::move(r));
    }
    return p;
}

inline Dataset random_dataset(std::uint64_t seed, const RandomDatasetOptions& opt = {}) {
    return Dataset::build(random_parts(seed, opt));
}

}  // namespace classilist::testing
