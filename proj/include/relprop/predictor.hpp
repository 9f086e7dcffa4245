#pragma once

#include <span>
#include <vector>

#include "relprop/confidence.hpp"
#include "relprop/graph.hpp"
#include "relprop/matrix.hpp"
#include "relprop/nn.hpp"
#include "relprop/patch_extract.hpp"
#include "relprop/rng.hpp"

namespace relprop {

struct PredictorTrainOptions {
    int epochs = 200;
    double lr = 0.01;
};

struct TrainReport {
    std::vector<double> epoch_loss;        // summed over patches
    double final_train_accuracy = 0.0;     // over labeled instances
};

// Patches for supervised training, each grown from a uniformly drawn labeled
// vertex. When the gain threshold is unreachable from a start (small
// component), the whole reachable component up to the size cap is used
// instead so a patch is always produced.
std::vector<GraphPatch> sample_training_patches(const AffinityGraph& graph,
                                                std::span<const VertexState> states,
                                                std::size_t count,
                                                const ExtractorConfig& config,
                                                Rng& rng);

// Cross-entropy training on the labeled members of the given patches.
TrainReport train_predictor(Model& model, const std::vector<GraphPatch>& patches,
                            const Matrix& features,
                            std::span<const VertexState> states,
                            const PredictorTrainOptions& options);

// Same loop, but a fresh patch set is drawn every epoch. The optimizer state
// persists across the draws.
TrainReport train_predictor_resampled(Model& model, const AffinityGraph& graph,
                                      const Matrix& features,
                                      std::span<const VertexState> states,
                                      std::size_t patches_per_epoch,
                                      const ExtractorConfig& extractor,
                                      const PredictorTrainOptions& options, Rng& rng);

// Class distribution for every patch vertex: softmax over the model logits.
Matrix predict_patch(const Model& model, const GraphPatch& patch,
                     const Matrix& features);

} // namespace relprop
