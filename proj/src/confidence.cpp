#include "relprop/confidence.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "relprop/util.hpp"

#ifndef NDEBUG
#include "relprop/bounds.hpp"
#endif

namespace relprop {

std::vector<VertexState> init_states(std::span<const int> seed_labels,
                                     int num_classes) {
    if (num_classes < 2)
        throw std::invalid_argument("states: need at least two classes");
    std::vector<VertexState> states(seed_labels.size());
    const double uniform = 1.0 / static_cast<double>(num_classes);
    for (std::size_t v = 0; v < states.size(); ++v) {
        VertexState& s = states[v];
        s.prob.assign(num_classes, uniform);
        s.pred_sum.assign(num_classes, 0.0);
        if (seed_labels[v] >= 0) {
            if (seed_labels[v] >= num_classes)
                throw std::invalid_argument("states: label out of range at vertex " +
                                            std::to_string(v));
            s.labeled = true;
            s.frozen = true;
            s.label = seed_labels[v];
            s.confidence = 1.0;
            std::fill(s.prob.begin(), s.prob.end(), 0.0);
            s.prob[s.label] = 1.0;
        }
    }
    return states;
}

void accumulate_view(VertexState& state, std::span<const double> prediction) {
    if (state.labeled) throw std::invalid_argument("accumulate: vertex is labeled");
    if (state.frozen) throw std::invalid_argument("accumulate: vertex is frozen");
    if (prediction.size() != state.prob.size())
        throw std::invalid_argument("accumulate: prediction length mismatch");
    state.visits += 1;
    const double inv = 1.0 / static_cast<double>(state.visits);
    for (std::size_t k = 0; k < prediction.size(); ++k) {
        state.pred_sum[k] += prediction[k];
        state.prob[k] = state.pred_sum[k] * inv;
    }
#ifndef NDEBUG
    state.debug_views.emplace_back(prediction.begin(), prediction.end());
    const ViewStats stats = view_stats(state.debug_views);
    assert(variance_bound_holds(stats));
    assert(entropy_bound_holds(stats));
#endif
}

double multi_view_confidence(const VertexState& state, double epsilon) {
    if (state.visits == 0)
        throw std::invalid_argument("confidence: vertex has no views");
    if (state.visits == 1) return epsilon;
    return *std::max_element(state.prob.begin(), state.prob.end());
}

std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>
select_confnet_training_set(std::span<const VertexState> states, double eta) {
    if (eta <= 0.0 || eta >= 1.0)
        throw std::invalid_argument("confnet: eta must be in (0, 1)");
    std::vector<std::uint32_t> unlabeled;
    for (std::uint32_t v = 0; v < states.size(); ++v)
        if (!states[v].labeled) unlabeled.push_back(v);
    const std::size_t u = unlabeled.size();
    const std::size_t take = static_cast<std::size_t>(
        std::ceil(eta * static_cast<double>(u)));
    if (take == 0 || 2 * take > u)
        throw std::invalid_argument("confnet: selection of " + std::to_string(take) +
                                    " per side infeasible with " + std::to_string(u) +
                                    " unlabeled vertices");
    std::sort(unlabeled.begin(), unlabeled.end(),
              [&states](std::uint32_t a, std::uint32_t b) {
                  if (states[a].confidence != states[b].confidence)
                      return states[a].confidence > states[b].confidence;
                  return a < b;
              });
    std::vector<std::uint32_t> positives(unlabeled.begin(), unlabeled.begin() + take);
    std::vector<std::uint32_t> negatives(unlabeled.end() - take, unlabeled.end());
    std::sort(positives.begin(), positives.end());
    std::sort(negatives.begin(), negatives.end());
    return {std::move(positives), std::move(negatives)};
}

namespace {

GraphPatch whole_graph_patch(const AffinityGraph& graph) {
    std::vector<std::uint32_t> ids(graph.num_vertices());
    std::iota(ids.begin(), ids.end(), 0u);
    return restrict_patch(graph, std::move(ids), 0);
}

Matrix gather_rows(const Matrix& features, std::span<const std::uint32_t> ids) {
    Matrix out(ids.size(), features.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto src = features.row(ids[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

} // namespace

std::vector<double> train_confnet(Model& confnet, const AffinityGraph& graph,
                                  const Matrix& features,
                                  std::span<const std::uint32_t> positives,
                                  std::span<const std::uint32_t> negatives,
                                  const ConfnetTrainOptions& options) {
    if (confnet.out_dim != 1)
        throw std::invalid_argument("confnet: model must have one output");
    if (positives.empty() || negatives.empty())
        throw std::invalid_argument("confnet: both label sets must be non-empty");
    if (options.epochs < 0) throw std::invalid_argument("confnet: negative epochs");

    std::vector<std::uint32_t> pos(positives.begin(), positives.end());
    std::vector<std::uint32_t> neg(negatives.begin(), negatives.end());
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    for (std::uint32_t v : pos)
        if (std::binary_search(neg.begin(), neg.end(), v))
            throw std::invalid_argument("confnet: label sets overlap at vertex " +
                                        std::to_string(v));

    struct TrainPatch {
        const GraphPatch* patch = nullptr;
        Matrix smoothed; // sgc only
        Matrix local_features;
        std::vector<std::uint8_t> targets;
        std::vector<std::uint8_t> mask;
    };

    GraphPatch full;
    std::vector<TrainPatch> units;
    auto add_unit = [&](const GraphPatch& patch) {
        TrainPatch u;
        u.patch = &patch;
        u.local_features = gather_rows(features, patch.vertex_ids);
        u.targets.assign(patch.size(), 0);
        u.mask.assign(patch.size(), 0);
        std::size_t marked = 0;
        for (std::size_t i = 0; i < patch.size(); ++i) {
            const std::uint32_t v = patch.vertex_ids[i];
            if (std::binary_search(pos.begin(), pos.end(), v)) {
                u.targets[i] = 1;
                u.mask[i] = 1;
                ++marked;
            } else if (std::binary_search(neg.begin(), neg.end(), v)) {
                u.mask[i] = 1;
                ++marked;
            }
        }
        if (marked == 0) return;
        if (confnet.arch == Arch::sgc) {
            u.smoothed = u.local_features;
            for (int r = 0; r < confnet.depth; ++r)
                u.smoothed = normalized_aggregate(patch, u.smoothed);
        }
        units.push_back(std::move(u));
    };

    if (options.patches) {
        for (const GraphPatch& p : *options.patches) add_unit(p);
    } else {
        full = whole_graph_patch(graph);
        add_unit(full);
    }
    if (units.empty())
        throw std::invalid_argument("confnet: no training patch covers a labeled vertex");

    AdamState adam = make_adam(confnet.weights, options.lr);
    std::vector<double> curve;
    curve.reserve(options.epochs);
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        double total = 0.0;
        std::vector<Matrix> grads;
        for (const TrainPatch& u : units) {
            LossGrad lg;
            std::vector<Matrix> g;
            if (confnet.arch == Arch::sgc) {
                Matrix logits = matmul(u.smoothed, confnet.weights[0]);
                lg = sigmoid_bce(logits, u.targets, u.mask);
                g.push_back(transpose_matmul(u.smoothed, lg.grad));
            } else {
                ForwardCache cache;
                Matrix logits = gcn_forward(*u.patch, u.local_features,
                                            confnet.weights, &cache);
                lg = sigmoid_bce(logits, u.targets, u.mask);
                g = backward(cache, confnet.weights, lg.grad);
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
        if (!std::isfinite(total)) throw NumericError("confnet: training diverged");
        adam_step(confnet.weights, grads, adam);
        curve.push_back(total);
    }
    return curve;
}

std::vector<double> confnet_scores(const Model& confnet, const AffinityGraph& graph,
                                   const Matrix& features) {
    GraphPatch full = whole_graph_patch(graph);
    Matrix logits = model_forward(confnet, full, features);
    if (logits.cols != 1)
        throw std::invalid_argument("confnet: model must have one output");
    std::vector<double> scores(logits.rows);
    for (std::size_t v = 0; v < logits.rows; ++v)
        scores[v] = 1.0 / (1.0 + std::exp(-logits.at(v, 0)));
    return scores;
}

} // namespace relprop
