#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "relprop/graph.hpp"
#include "relprop/matrix.hpp"

namespace relprop {

struct LPConfig {
    std::size_t max_sweeps = 1000;
    double tolerance = 1e-6; // max elementwise change that counts as converged
};

struct LPResult {
    Matrix probs;                   // per-vertex class distribution
    std::vector<double> confidence; // peak of each row
    std::size_t sweeps = 0;
};

// Classic diffusion baseline: synchronous sweeps of p <- rownorm(A) p with
// labeled rows clamped to their one-hot vectors. Unlabeled vertices start
// uniform; vertices with no usable neighbourhood mass keep their previous
// distribution.
LPResult run_lp(const AffinityGraph& graph, std::span<const int> seed_labels,
                int num_classes, const LPConfig& config);

} // namespace relprop
