#include "relprop/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "relprop/predictor.hpp"
#include "relprop/rng.hpp"
#include "relprop/util.hpp"

namespace relprop {

ConfidenceSource confidence_source_from_name(const std::string& name) {
    if (name == "random") return ConfidenceSource::random;
    if (name == "multi_view") return ConfidenceSource::multi_view;
    if (name == "combined") return ConfidenceSource::combined;
    throw ConfigError("unknown confidence source '" + name + "'");
}

std::string confidence_source_name(ConfidenceSource s) {
    switch (s) {
        case ConfidenceSource::random: return "random";
        case ConfidenceSource::multi_view: return "multi_view";
        default: return "combined";
    }
}

ExtractorConfig scaled_extractor(const SchedulerOptions& options, std::size_t n) {
    constexpr double reference = 10000.0;
    const double factor = std::min(1.0, static_cast<double>(n) / reference);
    ExtractorConfig cfg;
    const auto size_floor = std::min<std::size_t>(options.max_patch_size, 50);
    cfg.max_size = std::max<std::size_t>(
        size_floor,
        static_cast<std::size_t>(std::llround(static_cast<double>(options.max_patch_size) * factor)));
    const double gain_floor = std::min(options.gain_threshold, 5.0);
    cfg.gain_threshold = std::max(gain_floor, options.gain_threshold * factor);
    cfg.exclusion_hops = options.exclusion_hops;
    return cfg;
}

namespace {

struct Loop {
    const AffinityGraph& graph;
    const Matrix& features;
    const Model& predictor;
    const SchedulerOptions& opt;
    ExtractorConfig excfg;
    Rng rng;
    PropagationResult res;
    std::vector<char> excluded;
    std::vector<char> reachable;
    std::size_t num_classes = 0;
    std::size_t unlabeled_total = 0;
    bool confnet_infeasible = false;

    Loop(const AffinityGraph& g, const Matrix& f, std::span<const int> seeds,
         int classes, const Model& model, const SchedulerOptions& o)
        : graph(g), features(f), predictor(model), opt(o),
          excfg(scaled_extractor(o, g.num_vertices())), rng(o.seed) {
        res.states = init_states(seeds, classes);
        res.patch_count.assign(g.num_vertices(), 0);
        excluded.assign(g.num_vertices(), 0);
        num_classes = static_cast<std::size_t>(classes);
        for (const VertexState& s : res.states)
            if (!s.labeled) ++unlabeled_total;
        mark_reachable();
    }

    // Components with no labeled vertex can never host a patch, so the
    // stall-based stop only waits on vertices a propagation could reach.
    void mark_reachable() {
        reachable.assign(graph.num_vertices(), 0);
        std::vector<std::uint32_t> queue;
        for (std::uint32_t v = 0; v < res.states.size(); ++v)
            if (res.states[v].labeled) {
                reachable[v] = 1;
                queue.push_back(v);
            }
        for (std::size_t head = 0; head < queue.size(); ++head)
            for (const Edge& e : graph.neighbors(queue[head]))
                if (!reachable[e.to]) {
                    reachable[e.to] = 1;
                    queue.push_back(e.to);
                }
    }

    std::optional<std::uint32_t> pick_start(const std::vector<char>& also_skip) {
        std::vector<std::uint32_t> candidates;
        for (std::uint32_t v = 0; v < res.states.size(); ++v)
            if (res.states[v].frozen && !excluded[v] && !also_skip[v])
                candidates.push_back(v);
        if (candidates.empty()) return std::nullopt;
        return candidates[rng.below(candidates.size())];
    }

    std::size_t frozen_total() const {
        std::size_t k = 0;
        for (const VertexState& s : res.states)
            if (s.frozen) ++k;
        return k;
    }

    double mean_unlabeled_conf() const {
        double sum = 0.0;
        std::size_t k = 0;
        for (const VertexState& s : res.states)
            if (!s.labeled) {
                sum += s.confidence;
                ++k;
            }
        return k == 0 ? 0.0 : sum / static_cast<double>(k);
    }

    double estimate(std::uint32_t v) {
        const VertexState& s = res.states[v];
        const double mv = multi_view_confidence(s, opt.epsilon);
        switch (opt.source) {
            case ConfidenceSource::random:
                return rng.uniform();
            case ConfidenceSource::multi_view:
                return mv;
            default:
                if (res.confnet_trained)
                    return combined_confidence(mv, res.confnet_score[v]);
                return mv;
        }
    }

    void maybe_train_confnet() {
        if (opt.source != ConfidenceSource::combined) return;
        if (res.confnet_trained || confnet_infeasible) return;
        const std::size_t take = static_cast<std::size_t>(
            std::ceil(opt.eta * static_cast<double>(unlabeled_total)));
        if (take == 0 || 2 * take > unlabeled_total) {
            confnet_infeasible = true;
            return;
        }
        auto [pos, neg] = select_confnet_training_set(res.states, opt.eta);
        Model confnet = make_model(Arch::sgc, opt.confnet_depth, features.cols, 0, 1, rng);
        ConfnetTrainOptions copts;
        copts.epochs = opt.confnet_epochs;
        copts.lr = opt.confnet_lr;
        std::vector<GraphPatch> patches;
        if (opt.confnet_on_patches) {
            patches = sample_training_patches(graph, res.states, 16, excfg, rng);
            copts.patches = &patches;
        }
        train_confnet(confnet, graph, features, pos, neg, copts);
        res.confnet_score = confnet_scores(confnet, graph, features);
        res.confnet_trained = true;
    }

    // Adds the patch predictions as one view on each unlabeled unfrozen
    // member, then re-estimates and possibly freezes them. Returns whether
    // any vertex froze; view counters alone tick every round, so the stall
    // detector keys on growth of the frozen set instead.
    bool process_patch(const GraphPatch& patch) {
        const Matrix preds = predict_patch(predictor, patch, features);
        bool froze = false;
        std::vector<std::uint32_t> touched;
        for (std::size_t i = 0; i < patch.size(); ++i) {
            const std::uint32_t v = patch.vertex_ids[i];
            res.patch_count[v] += 1;
            VertexState& s = res.states[v];
            if (s.labeled || s.frozen) continue;
            accumulate_view(s, preds.row(i));
            touched.push_back(v);
        }
        for (std::uint32_t v : touched) {
            VertexState& s = res.states[v];
            s.confidence = estimate(v);
            if (s.confidence >= opt.conf_threshold) {
                s.frozen = true;
                froze = true;
            }
        }
        return froze;
    }

    void retire_zone(std::uint32_t start) {
        for (std::uint32_t v : exclusion_zone(graph, start, opt.exclusion_hops))
            excluded[v] = 1;
    }

    void log_iteration(std::uint32_t start, std::size_t patch_size, double gain) {
        res.log.push_back({res.iterations, start, patch_size, gain, frozen_total(),
                           mean_unlabeled_conf()});
    }

    void refresh_final() {
        for (std::uint32_t v = 0; v < res.states.size(); ++v) {
            VertexState& s = res.states[v];
            if (s.labeled) {
                res.multi_view_conf[v] = 1.0;
                continue;
            }
            if (s.visits == 0) {
                res.multi_view_conf[v] = opt.epsilon;
                if (!s.frozen) s.confidence = opt.epsilon;
                continue;
            }
            const double mv = multi_view_confidence(s, opt.epsilon);
            res.multi_view_conf[v] = mv;
            if (s.frozen) continue; // frozen estimates stay exactly as frozen
            switch (opt.source) {
                case ConfidenceSource::random:
                    break; // keep the last drawn estimate
                case ConfidenceSource::multi_view:
                    s.confidence = mv;
                    break;
                default:
                    s.confidence = res.confnet_trained
                                       ? combined_confidence(mv, res.confnet_score[v])
                                       : mv;
            }
        }
    }

    void run() {
        const std::size_t trigger = static_cast<std::size_t>(
            std::floor(opt.confnet_warmup * static_cast<double>(opt.max_iterations)));
        const std::size_t batch = std::max<std::size_t>(1, opt.parallel_patches);
        std::size_t streak = 0;
        std::vector<char> pending(graph.num_vertices(), 0);

        while (res.iterations < opt.max_iterations) {
            if (res.iterations >= trigger) maybe_train_confnet();

            // pick up to `batch` starts; later patches in a round must not
            // overlap earlier ones, first one always proceeds
            std::fill(pending.begin(), pending.end(), 0);
            std::vector<char> claimed(graph.num_vertices(), 0);
            bool round_changed = false;
            std::size_t processed = 0;
            bool exhausted_round = false;

            for (std::size_t k = 0; k < batch && res.iterations < opt.max_iterations; ++k) {
                auto start = pick_start(pending);
                if (!start) {
                    if (k == 0 && processed == 0) exhausted_round = true;
                    break;
                }
                pending[*start] = 1;
                auto patch = extract_patch(graph, res.states, *start, excfg);
                if (!patch) {
                    excluded[*start] = 1;
                    res.iterations += 1;
                    log_iteration(*start, 0, 0.0);
                    continue;
                }
                if (k > 0) {
                    bool overlap = false;
                    for (std::uint32_t v : patch->vertex_ids)
                        if (claimed[v]) {
                            overlap = true;
                            break;
                        }
                    if (overlap) continue; // retry in a later round
                }
                for (std::uint32_t v : patch->vertex_ids) claimed[v] = 1;
                const double gain = expected_gain(*patch, res.states);
                if (process_patch(*patch)) round_changed = true;
                retire_zone(*start);
                res.iterations += 1;
                ++processed;
                log_iteration(*start, patch->size(), gain);
            }

            if (exhausted_round) {
                res.exhausted = true;
                break;
            }
            streak = round_changed ? 0 : streak + 1;
            if (streak >= opt.patience && coverage_complete()) break;
        }

        if (res.iterations > 0) maybe_train_confnet(); // ended before the trigger
        res.multi_view_conf.assign(res.states.size(), 0.0);
        refresh_final();
    }

    bool coverage_complete() const {
        for (std::size_t v = 0; v < res.patch_count.size(); ++v)
            if (res.patch_count[v] == 0 && reachable[v] && !res.states[v].labeled)
                return false;
        return true;
    }
};

} // namespace

PropagationResult propagate(const AffinityGraph& graph, const Matrix& features,
                            std::span<const int> seed_labels, int num_classes,
                            const Model& predictor, const SchedulerOptions& options) {
    if (seed_labels.size() != graph.num_vertices())
        throw std::invalid_argument("propagate: seed label count does not match graph");
    if (features.rows != graph.num_vertices())
        throw std::invalid_argument("propagate: feature rows do not match graph");
    if (options.conf_threshold <= 0.0 || options.conf_threshold > 1.0)
        throw std::invalid_argument("propagate: freeze threshold must be in (0, 1]");
    bool any_labeled = false;
    for (int y : seed_labels)
        if (y >= 0) any_labeled = true;
    if (!any_labeled) throw std::invalid_argument("propagate: no labeled vertices");

    Loop loop(graph, features, seed_labels, num_classes, predictor, options);
    loop.run();
    return std::move(loop.res);
}

double determine_outlier_threshold(std::span<const double> confidences,
                                   std::span<const int> truth) {
    if (confidences.size() != truth.size() || confidences.empty())
        throw std::invalid_argument("threshold: bad validation arrays");
    bool has_out = false, has_in = false;
    for (int y : truth) (y < 0 ? has_out : has_in) = true;
    if (!has_out || !has_in)
        throw DataError("threshold: validation set needs both outliers and in-class vertices");

    std::vector<double> distinct(confidences.begin(), confidences.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> candidates;
    candidates.push_back(distinct.front());
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
        candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
    candidates.push_back(std::nextafter(distinct.back(),
                                        std::numeric_limits<double>::infinity()));
    std::sort(candidates.begin(), candidates.end());

    double best_t = candidates.front();
    std::size_t best_correct = 0;
    bool first = true;
    for (double t : candidates) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < confidences.size(); ++i) {
            const bool flagged = confidences[i] < t;
            if (truth[i] < 0 ? flagged : !flagged) ++correct;
        }
        if (first || correct > best_correct) { // ties keep the smaller candidate
            best_correct = correct;
            best_t = t;
            first = false;
        }
    }
    return best_t;
}

OutlierDecision finalize_labels(std::span<const VertexState> states,
                                double threshold) {
    OutlierDecision out;
    out.threshold = threshold;
    out.labels.resize(states.size());
    out.confidence.resize(states.size());
    for (std::size_t v = 0; v < states.size(); ++v) {
        const VertexState& s = states[v];
        out.confidence[v] = s.confidence;
        if (s.labeled) {
            out.labels[v] = s.label;
            continue;
        }
        if (s.confidence < threshold) {
            out.labels[v] = -1;
            continue;
        }
        std::size_t best = 0;
        for (std::size_t k = 1; k < s.prob.size(); ++k)
            if (s.prob[k] > s.prob[best]) best = k;
        out.labels[v] = static_cast<int>(best);
    }
    return out;
}

} // namespace relprop
