#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "relprop/confidence.hpp"
#include "relprop/graph.hpp"
#include "relprop/io.hpp"
#include "relprop/matrix.hpp"
#include "relprop/nn.hpp"
#include "relprop/patch_extract.hpp"

namespace relprop {

// Where per-vertex confidence estimates come from while propagating.
enum class ConfidenceSource { random, multi_view, combined };

ConfidenceSource confidence_source_from_name(const std::string& name);
std::string confidence_source_name(ConfidenceSource s);

struct SchedulerOptions {
    double conf_threshold = 0.9;    // freeze level
    double gain_threshold = 500.0;  // base value, scaled by graph size
    std::size_t max_patch_size = 3000; // base value, scaled by graph size
    int exclusion_hops = 1;
    double epsilon = 0.01;          // confidence after a single view
    double eta = 0.05;              // confidence-model training fraction
    ConfidenceSource source = ConfidenceSource::combined;
    double confnet_warmup = 0.5;    // fraction of max_iterations before training
    int confnet_epochs = 100;
    int confnet_depth = 1;
    double confnet_lr = 0.01;
    bool confnet_on_patches = false; // train on sampled patches, not the graph
    std::size_t max_iterations = 200;
    std::size_t patience = 20;      // quiet iterations before stopping
    std::size_t parallel_patches = 1;
    unsigned workers = 1;
    std::uint64_t seed = 0;
};

// Base patch parameters assume a reference graph of 10000 vertices; smaller
// graphs shrink proportionally so desk-size runs stay meaningful.
ExtractorConfig scaled_extractor(const SchedulerOptions& options, std::size_t n);

struct PropagationResult {
    std::vector<VertexState> states;
    std::vector<IterationRecord> log;
    std::vector<std::uint32_t> patch_count;  // patches each vertex appeared in
    std::vector<double> multi_view_conf;     // final multi-view-only estimate
    std::vector<double> confnet_score;       // empty unless the model trained
    bool confnet_trained = false;
    std::size_t iterations = 0;
    bool exhausted = false; // ran out of start candidates
};

// Patch-by-patch label propagation. Starts are drawn uniformly from the
// frozen set minus retired neighbourhoods; every processed patch adds one
// prediction view to its unlabeled unfrozen members, and vertices whose
// confidence reaches conf_threshold freeze permanently. Midway through the
// iteration budget (under the combined source) a confidence model is fitted
// to the current ranking and its score joins the estimate.
PropagationResult propagate(const AffinityGraph& graph, const Matrix& features,
                            std::span<const int> seed_labels, int num_classes,
                            const Model& predictor, const SchedulerOptions& options);

// Threshold separating likely outliers by confidence, chosen to maximize
// validation accuracy; ties resolve to the smallest candidate. Requires both
// an outlier and an in-class example.
double determine_outlier_threshold(std::span<const double> confidences,
                                   std::span<const int> truth);

struct OutlierDecision {
    double threshold = 0.0;
    std::vector<int> labels;        // -1 or argmax class per vertex
    std::vector<double> confidence; // final per-vertex confidence
};

// Final labels: vertices below the threshold become -1, the rest take the
// argmax of their averaged prediction. Labeled vertices keep their labels.
OutlierDecision finalize_labels(std::span<const VertexState> states,
                                double threshold);

} // namespace relprop
