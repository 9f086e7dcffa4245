#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relprop/graph.hpp"
#include "relprop/matrix.hpp"
#include "relprop/rng.hpp"

namespace relprop {

// Self-loop augmented, row-normalized neighbourhood average over a patch:
// out_i = (F_i + sum_j w_ij F_j) / (1 + sum_j w_ij).
Matrix normalized_aggregate(const GraphPatch& patch, const Matrix& values);

// Transpose of the same linear operator, used when pushing gradients back.
Matrix normalized_aggregate_transpose(const GraphPatch& patch, const Matrix& values);

// Intermediate activations recorded during a forward pass. Valid for one
// backward over the same patch and weights; reused or mismatched caches are
// rejected.
struct ForwardCache {
    std::vector<Matrix> aggregated; // input seen by each weight matrix
    std::vector<Matrix> preact;     // output of each weight matrix, pre-activation
    const GraphPatch* patch = nullptr;
    bool relu_hidden = false;
    bool filled = false;
};

// Stacked aggregate-then-linear blocks, ReLU between blocks, none after the
// last, no bias terms.
Matrix gcn_forward(const GraphPatch& patch, const Matrix& features,
                   const std::vector<Matrix>& weights, ForwardCache* cache = nullptr);

// depth rounds of aggregation followed by a single linear map, no
// nonlinearity anywhere.
Matrix sgc_forward(const GraphPatch& patch, const Matrix& features, int depth,
                   const Matrix& classifier, ForwardCache* cache = nullptr);

// Weight gradients for the pass recorded in cache.
std::vector<Matrix> backward(const ForwardCache& cache,
                             const std::vector<Matrix>& weights,
                             const Matrix& grad_logits);

struct LossGrad {
    double value = 0.0;
    Matrix grad; // same shape as the logits
};

// Mean cross-entropy with integrated softmax over the rows where mask is
// nonzero. labels[i] must be a valid column for every masked row.
LossGrad softmax_xent(const Matrix& logits, std::span<const int> labels,
                      std::span<const std::uint8_t> mask);

// Mean binary cross-entropy with integrated sigmoid; logits must be a single
// column. targets are 0/1 per row.
LossGrad sigmoid_bce(const Matrix& logits, std::span<const std::uint8_t> targets,
                     std::span<const std::uint8_t> mask);

Matrix softmax_rows(const Matrix& logits);

struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
};

AdamState make_adam(const std::vector<Matrix>& params, double lr);
void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
               AdamState& state);

enum class Arch { sgc, gcn };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& name);

struct Model {
    Arch arch = Arch::sgc;
    int depth = 2;
    int hidden = 256;  // width of gcn hidden layers, unused for sgc
    int out_dim = 0;
    std::vector<Matrix> weights; // sgc: one classifier; gcn: depth matrices
};

// Xavier-uniform initialization, bounds +-sqrt(6 / (fan_in + fan_out)).
Model make_model(Arch arch, int depth, std::size_t in_dim, int hidden,
                 std::size_t out_dim, Rng& rng);

Matrix model_forward(const Model& model, const GraphPatch& patch,
                     const Matrix& features, ForwardCache* cache = nullptr);

// Raw parameter checkpoint: magic "RPRM", a version byte, then layer count,
// shapes and values, all little-endian.
void save_params(const std::string& path, const std::vector<Matrix>& params);
std::vector<Matrix> load_params(const std::string& path);

// Model checkpoint: one text line "arch depth hidden out_dim" followed by the
// parameter blob.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

} // namespace relprop
