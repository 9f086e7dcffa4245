#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "relprop/graph.hpp"
#include "relprop/matrix.hpp"
#include "relprop/nn.hpp"

namespace relprop {

// Per-vertex propagation state. prob is the running average of the
// predictions this vertex has received; pred_sum keeps the raw sum so the
// average stays exact as views arrive.
struct VertexState {
    std::vector<double> prob;
    std::vector<double> pred_sum;
    std::uint32_t visits = 0;
    double confidence = 0.0;
    bool frozen = false;
    bool labeled = false;
    int label = -1;
#ifndef NDEBUG
    std::vector<std::vector<double>> debug_views;
#endif
};

// Fresh states for n vertices with num_classes classes. seed_labels >= 0 mark
// labeled vertices; they get a one-hot prob, confidence 1 and start frozen.
// Unlabeled vertices start with a uniform prob and confidence 0.
std::vector<VertexState> init_states(std::span<const int> seed_labels,
                                     int num_classes);

// Folds one prediction (a probability vector) into the running average.
// Labeled and frozen vertices never accept new views.
void accumulate_view(VertexState& state, std::span<const double> prediction);

// Peak of the averaged prediction once a vertex has been seen from at least
// two patches; a single view only earns the floor value epsilon.
double multi_view_confidence(const VertexState& state, double epsilon);

// Average of the multi-view estimate and the learned score.
inline double combined_confidence(double multi_view, double learned) {
    return 0.5 * (multi_view + learned);
}

// Training vertices for the confidence model: the ceil(eta*U) most and least
// confident unlabeled vertices (U = unlabeled count). One descending sort
// with index tie-break; positives come from the head, negatives from the
// tail, so the two sets cannot overlap while 2*ceil(eta*U) <= U.
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>
select_confnet_training_set(std::span<const VertexState> states, double eta);

struct ConfnetTrainOptions {
    int epochs = 100;
    double lr = 0.01;
    // when set, train over these patches instead of the whole graph
    const std::vector<GraphPatch>* patches = nullptr;
};

// Fits the scalar confidence head with binary cross-entropy: positives 1,
// negatives 0. Returns the per-epoch loss curve.
std::vector<double> train_confnet(Model& confnet, const AffinityGraph& graph,
                                  const Matrix& features,
                                  std::span<const std::uint32_t> positives,
                                  std::span<const std::uint32_t> negatives,
                                  const ConfnetTrainOptions& options);

// Sigmoid scores for every vertex of the graph.
std::vector<double> confnet_scores(const Model& confnet, const AffinityGraph& graph,
                                   const Matrix& features);

} // namespace relprop
