#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "relprop/matrix.hpp"

namespace relprop {

// Recipe for a synthetic noisy-neighbourhood dataset: unit-sphere class
// clusters plus a configurable mass of out-of-class vertices drawn from
// extra clusters.
struct SynthSpec {
    int num_classes = 10;
    int samples_per_class = 200;
    int feature_dim = 16;
    double spread = 0.20;     // cluster standard deviation before renormalizing
    int outlier_classes = 100; // distinct nuisance clusters
    double noise_ratio = 0.5; // target outlier fraction among unlabeled
    double labeled_ratio = 0.01;
    std::uint64_t seed = 1;
};

struct Dataset {
    Matrix features;        // unit-norm rows
    std::vector<int> truth; // class id, -1 for out-of-class
    std::vector<char> split; // 'L' labeled, 'V' validation, 'U' evaluation
    int num_classes = 0;

    std::size_t size() const { return truth.size(); }
};

// Deterministic generation from the spec seed. In-class vertices come first,
// grouped by class, outliers after. The labeled pool is stratified per class;
// the validation pool matches its size and mirrors the outlier ratio.
Dataset generate_dataset(const SynthSpec& spec);

struct MetricsReport {
    double acc = 0.0;            // all evaluation vertices
    double acc_inclass = 0.0;    // ground-truth in-class vertices only
    double outlier_precision = 0.0;
    double outlier_recall = 0.0;
    double conf_gap = 0.0;       // mean in-class minus mean outlier confidence
    double runtime_s = 0.0;
};

// Scores predictions over the evaluation vertices (everything outside the
// labeled pool). Degenerate rates (no predicted or no true outliers) count
// as perfect rather than undefined.
MetricsReport evaluate_labels(std::span<const int> predicted,
                              std::span<const double> confidence,
                              const Dataset& dataset);

} // namespace relprop
