#include "relprop/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "relprop/util.hpp"

namespace relprop {

namespace {

Matrix gather_rows(const Matrix& features, std::span<const std::uint32_t> ids) {
    Matrix out(ids.size(), features.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto src = features.row(ids[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

// reachable component from start in breadth-first order, capped at max_size
GraphPatch component_patch(const AffinityGraph& graph, std::uint32_t start,
                           std::size_t max_size) {
    std::vector<char> seen(graph.num_vertices(), 0);
    seen[start] = 1;
    std::vector<std::uint32_t> members{start};
    std::deque<std::uint32_t> queue{start};
    while (!queue.empty() && members.size() < max_size) {
        const std::uint32_t u = queue.front();
        queue.pop_front();
        for (const Edge& e : graph.neighbors(u)) {
            if (seen[e.to]) continue;
            seen[e.to] = 1;
            members.push_back(e.to);
            if (members.size() >= max_size) break;
            queue.push_back(e.to);
        }
    }
    return restrict_patch(graph, std::move(members), start);
}

struct PatchData {
    const GraphPatch* patch = nullptr;
    Matrix features;   // rows gathered for the patch
    Matrix smoothed;   // sgc input after depth aggregations
    std::vector<int> labels;
    std::vector<std::uint8_t> mask;
    std::size_t labeled_count = 0;
};

PatchData prepare_patch(const GraphPatch& patch, const Matrix& features,
                        std::span<const VertexState> states, const Model& model) {
    PatchData d;
    d.patch = &patch;
    d.features = gather_rows(features, patch.vertex_ids);
    d.labels.assign(patch.size(), 0);
    d.mask.assign(patch.size(), 0);
    for (std::size_t i = 0; i < patch.size(); ++i) {
        const VertexState& s = states[patch.vertex_ids[i]];
        if (s.labeled) {
            d.labels[i] = s.label;
            d.mask[i] = 1;
            ++d.labeled_count;
        }
    }
    if (model.arch == Arch::sgc && d.labeled_count > 0) {
        d.smoothed = d.features;
        for (int r = 0; r < model.depth; ++r)
            d.smoothed = normalized_aggregate(patch, d.smoothed);
    }
    return d;
}

double label_accuracy(const Matrix& logits, const PatchData& d) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (!d.mask[i]) continue;
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols; ++c)
            if (logits.at(i, c) > logits.at(i, best)) best = c;
        if (static_cast<int>(best) == d.labels[i]) ++correct;
    }
    return static_cast<double>(correct);
}

TrainReport run_epochs(Model& model, AdamState& adam,
                       const std::vector<PatchData>& data, int epochs) {
    TrainReport report;
    report.epoch_loss.reserve(epochs);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double total = 0.0;
        std::vector<Matrix> grads;
        for (const PatchData& d : data) {
            if (d.labeled_count == 0) continue;
            LossGrad lg;
            std::vector<Matrix> g;
            if (model.arch == Arch::sgc) {
                Matrix logits = matmul(d.smoothed, model.weights[0]);
                lg = softmax_xent(logits, d.labels, d.mask);
                g.push_back(transpose_matmul(d.smoothed, lg.grad));
            } else {
                ForwardCache cache;
                Matrix logits = gcn_forward(*d.patch, d.features, model.weights, &cache);
                lg = softmax_xent(logits, d.labels, d.mask);
                g = backward(cache, model.weights, lg.grad);
            }
            total += lg.value;
            if (grads.empty()) {
                grads = std::move(g);
            } else {
                for (std::size_t l = 0; l < grads.size(); ++l)
                    for (std::size_t i = 0; i < grads[l].data.size(); ++i)
                        grads[l].data[i] += g[l].data[i];
            }
        }
        if (!std::isfinite(total)) throw NumericError("predictor: training diverged");
        adam_step(model.weights, grads, adam);
        report.epoch_loss.push_back(total);
    }
    return report;
}

double final_accuracy(const Model& model, const std::vector<PatchData>& data) {
    double correct = 0.0;
    std::size_t total = 0;
    for (const PatchData& d : data) {
        if (d.labeled_count == 0) continue;
        Matrix logits = model.arch == Arch::sgc
                            ? matmul(d.smoothed, model.weights[0])
                            : gcn_forward(*d.patch, d.features, model.weights);
        correct += label_accuracy(logits, d);
        total += d.labeled_count;
    }
    return total == 0 ? 0.0 : correct / static_cast<double>(total);
}

} // namespace

std::vector<GraphPatch> sample_training_patches(const AffinityGraph& graph,
                                                std::span<const VertexState> states,
                                                std::size_t count,
                                                const ExtractorConfig& config,
                                                Rng& rng) {
    if (states.size() != graph.num_vertices())
        throw std::invalid_argument("sample: state count does not match graph");
    std::vector<std::uint32_t> labeled;
    for (std::uint32_t v = 0; v < states.size(); ++v)
        if (states[v].labeled) labeled.push_back(v);
    if (labeled.empty() && count > 0)
        throw std::invalid_argument("sample: no labeled vertices");

    // shuffled round-robin: every labeled anchor appears once per cycle, so no
    // class is starved of gradient signal when count covers the pool
    for (std::size_t i = labeled.size(); i > 1; --i)
        std::swap(labeled[i - 1], labeled[rng.below(i)]);

    std::vector<GraphPatch> patches;
    patches.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t start = labeled[i % labeled.size()];
        auto patch = extract_patch(graph, states, start, config);
        if (patch)
            patches.push_back(std::move(*patch));
        else
            patches.push_back(component_patch(graph, start, config.max_size));
    }
    return patches;
}

TrainReport train_predictor(Model& model, const std::vector<GraphPatch>& patches,
                            const Matrix& features,
                            std::span<const VertexState> states,
                            const PredictorTrainOptions& options) {
    if (options.epochs < 0) throw std::invalid_argument("predictor: negative epochs");
    std::vector<PatchData> data;
    data.reserve(patches.size());
    std::size_t labeled_total = 0;
    for (const GraphPatch& p : patches) {
        data.push_back(prepare_patch(p, features, states, model));
        labeled_total += data.back().labeled_count;
    }
    if (labeled_total == 0)
        throw std::invalid_argument("predictor: no labeled vertex in any patch");

    AdamState adam = make_adam(model.weights, options.lr);
    TrainReport report = run_epochs(model, adam, data, options.epochs);
    report.final_train_accuracy = final_accuracy(model, data);
    return report;
}

TrainReport train_predictor_resampled(Model& model, const AffinityGraph& graph,
                                      const Matrix& features,
                                      std::span<const VertexState> states,
                                      std::size_t patches_per_epoch,
                                      const ExtractorConfig& extractor,
                                      const PredictorTrainOptions& options, Rng& rng) {
    if (options.epochs < 0) throw std::invalid_argument("predictor: negative epochs");
    AdamState adam = make_adam(model.weights, options.lr);
    TrainReport report;
    report.epoch_loss.reserve(options.epochs);
    std::vector<GraphPatch> patches;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        patches = sample_training_patches(graph, states, patches_per_epoch,
                                          extractor, rng);
        std::vector<PatchData> data;
        data.reserve(patches.size());
        std::size_t labeled_total = 0;
        for (const GraphPatch& p : patches) {
            data.push_back(prepare_patch(p, features, states, model));
            labeled_total += data.back().labeled_count;
        }
        if (labeled_total == 0)
            throw std::invalid_argument("predictor: no labeled vertex in any patch");
        TrainReport step = run_epochs(model, adam, data, 1);
        report.epoch_loss.push_back(step.epoch_loss.empty() ? 0.0
                                                            : step.epoch_loss[0]);
        if (epoch + 1 == options.epochs)
            report.final_train_accuracy = final_accuracy(model, data);
    }
    return report;
}

Matrix predict_patch(const Model& model, const GraphPatch& patch,
                     const Matrix& features) {
    Matrix local = gather_rows(features, patch.vertex_ids);
    Matrix logits = model_forward(model, patch, local);
    return softmax_rows(logits);
}

} // namespace relprop
