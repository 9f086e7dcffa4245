#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "relprop/predictor.hpp"
#include "relprop/rng.hpp"
#include "relprop/scheduler.hpp"
#include "relprop/util.hpp"

using namespace relprop;

namespace {

struct Scene {
    Matrix features;
    AffinityGraph graph;
    std::vector<int> seeds;
    std::vector<int> truth;
    int num_classes = 3;
};

Scene make_scene(std::uint64_t seed, std::size_t per_class = 25,
                 std::size_t labeled_per_class = 3) {
    Rng rng(seed);
    Scene s;
    const std::size_t n = 3 * per_class, d = 6;
    s.features = Matrix(n, d);
    s.truth.resize(n);
    s.seeds.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i / per_class);
        s.truth[i] = c;
        for (std::size_t j = 0; j < d; ++j)
            s.features.at(i, j) = (static_cast<int>(j) == 2 * c ? 1.0 : 0.0) +
                                  0.08 * rng.normal();
        if (i % per_class < labeled_per_class) s.seeds[i] = c;
    }
    s.graph = build_knn_graph(s.features, 5);
    return s;
}

Model fitted_predictor(const Scene& s, std::uint64_t seed) {
    Rng rng(seed);
    auto states = init_states(s.seeds, s.num_classes);
    ExtractorConfig cfg;
    cfg.gain_threshold = 8.0;
    cfg.max_size = 40;
    const auto patches = sample_training_patches(s.graph, states, 8, cfg, rng);
    Model model = make_model(Arch::sgc, 2, s.features.cols, 16, s.num_classes, rng);
    PredictorTrainOptions opt;
    opt.epochs = 120;
    opt.lr = 0.05;
    train_predictor(model, patches, s.features, states, opt);
    return model;
}

SchedulerOptions desk_options(std::size_t n) {
    SchedulerOptions o;
    // bases are quoted for a 10000-vertex graph; undo the scaling so the
    // effective values are what the test wants
    const double factor = std::min(1.0, static_cast<double>(n) / 10000.0);
    o.gain_threshold = 8.0 / factor;
    o.max_patch_size = 3000; // floors at 50 on desk graphs
    o.exclusion_hops = 0;    // tiny graphs cannot spare whole neighbourhoods
    o.max_iterations = 200;
    o.patience = 20;
    o.seed = 9;
    return o;
}

} // namespace

TEST_CASE("patch parameters scale with graph size down to their floors") {
    SchedulerOptions o;
    o.gain_threshold = 500.0;
    o.max_patch_size = 3000;
    const ExtractorConfig full = scaled_extractor(o, 10000);
    CHECK(full.gain_threshold == 500.0);
    CHECK(full.max_size == 3000);
    const ExtractorConfig big = scaled_extractor(o, 50000);
    CHECK(big.gain_threshold == 500.0); // never grows past the base
    CHECK(big.max_size == 3000);
    const ExtractorConfig half = scaled_extractor(o, 5000);
    CHECK(half.gain_threshold == 250.0);
    CHECK(half.max_size == 1500);
    const ExtractorConfig desk = scaled_extractor(o, 100);
    CHECK(desk.gain_threshold == 5.0); // floor
    CHECK(desk.max_size == 50);        // floor
    // bases below the floor win over the floor
    SchedulerOptions tiny;
    tiny.gain_threshold = 2.0;
    tiny.max_patch_size = 10;
    const ExtractorConfig t = scaled_extractor(tiny, 100);
    CHECK(t.gain_threshold == 2.0);
    CHECK(t.max_size == 10);
}

TEST_CASE("source names round-trip and unknown names are refused") {
    for (ConfidenceSource s : {ConfidenceSource::random, ConfidenceSource::multi_view,
                               ConfidenceSource::combined})
        CHECK(confidence_source_from_name(confidence_source_name(s)) == s);
    CHECK_THROWS(confidence_source_from_name("oracle"));
}

TEST_CASE("propagation freezes the easy scene and labels it correctly") {
    const Scene s = make_scene(301);
    const Model model = fitted_predictor(s, 302);
    SchedulerOptions opt = desk_options(s.graph.num_vertices());
    opt.source = ConfidenceSource::multi_view;
    opt.conf_threshold = 0.9;

    const PropagationResult r =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    CHECK(r.iterations > 0);
    CHECK(r.log.size() == r.iterations);

    // labeled vertices stay pristine
    for (std::size_t v = 0; v < s.seeds.size(); ++v)
        if (s.seeds[v] >= 0) {
            CHECK(r.states[v].labeled);
            CHECK(r.states[v].frozen);
            CHECK(r.states[v].confidence == 1.0);
            CHECK(r.states[v].label == s.seeds[v]);
            CHECK(r.multi_view_conf[v] == 1.0);
        }

    // every frozen unlabeled vertex crossed the threshold and stayed there
    std::size_t frozen = 0, visited = 0;
    for (std::size_t v = 0; v < r.states.size(); ++v) {
        const VertexState& st = r.states[v];
        if (st.labeled) continue;
        if (st.frozen) {
            ++frozen;
            CHECK(st.confidence >= opt.conf_threshold);
        }
        if (st.visits > 0) ++visited;
        if (st.visits == 0) CHECK(st.confidence == opt.epsilon);
        // the reported multi-view estimate matches the state arithmetic
        if (st.visits >= 2) {
            const double peak = *std::max_element(st.prob.begin(), st.prob.end());
            CHECK(r.multi_view_conf[v] == peak);
        } else {
            CHECK(r.multi_view_conf[v] == opt.epsilon);
        }
        if (!st.frozen && st.visits > 0) CHECK(st.confidence == r.multi_view_conf[v]);
    }
    CHECK(visited > 0);
    CHECK(frozen > 0);

    // with no outlier cut, the argmax labels recover the clusters
    const OutlierDecision d = finalize_labels(r.states, 0.0);
    std::size_t hits = 0, judged = 0;
    for (std::size_t v = 0; v < d.labels.size(); ++v) {
        if (s.seeds[v] >= 0) continue;
        ++judged;
        hits += (d.labels[v] == s.truth[v]);
    }
    CHECK(static_cast<double>(hits) / static_cast<double>(judged) >= 0.9);
}

TEST_CASE("the iteration log is consistent and freezing is monotone") {
    const Scene s = make_scene(311);
    const Model model = fitted_predictor(s, 312);
    SchedulerOptions opt = desk_options(s.graph.num_vertices());
    opt.source = ConfidenceSource::multi_view;

    const PropagationResult r =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    const ExtractorConfig excfg = scaled_extractor(opt, s.graph.num_vertices());
    std::size_t prev_frozen = 0;
    for (std::size_t i = 0; i < r.log.size(); ++i) {
        const IterationRecord& rec = r.log[i];
        CHECK(rec.iter == i + 1);
        CHECK(rec.patch_size <= excfg.max_size);
        CHECK(rec.frozen_total >= prev_frozen);
        prev_frozen = rec.frozen_total;
        CHECK(rec.mean_conf >= 0.0);
        CHECK(rec.mean_conf <= 1.0);
        // starts come from the frozen set, which only grows
        CHECK((r.states[rec.start_vertex].frozen || r.states[rec.start_vertex].labeled));
        if (rec.patch_size > 0) CHECK(rec.gain >= excfg.gain_threshold);
    }
}

TEST_CASE("the same seed reproduces every byte of the run") {
    const Scene s = make_scene(321);
    const Model model = fitted_predictor(s, 322);
    SchedulerOptions opt = desk_options(s.graph.num_vertices());
    opt.source = ConfidenceSource::combined;
    opt.eta = 0.1;
    opt.max_iterations = 60;

    const PropagationResult a =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    const PropagationResult b =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    REQUIRE(a.states.size() == b.states.size());
    CHECK(a.iterations == b.iterations);
    CHECK(a.confnet_trained == b.confnet_trained);
    CHECK(a.confnet_score == b.confnet_score);
    CHECK(a.patch_count == b.patch_count);
    CHECK(a.multi_view_conf == b.multi_view_conf);
    for (std::size_t v = 0; v < a.states.size(); ++v) {
        CHECK(a.states[v].confidence == b.states[v].confidence);
        CHECK(a.states[v].prob == b.states[v].prob);
        CHECK(a.states[v].visits == b.states[v].visits);
        CHECK(a.states[v].frozen == b.states[v].frozen);
    }
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].start_vertex == b.log[i].start_vertex);
        CHECK(a.log[i].patch_size == b.log[i].patch_size);
        CHECK(a.log[i].gain == b.log[i].gain);
    }

    SchedulerOptions other = opt;
    other.seed = opt.seed + 1;
    const PropagationResult c =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, other);
    bool same_starts = a.log.size() == c.log.size();
    if (same_starts)
        for (std::size_t i = 0; i < a.log.size(); ++i)
            same_starts = same_starts && a.log[i].start_vertex == c.log[i].start_vertex;
    CHECK_FALSE(same_starts);
}

TEST_CASE("a freeze level at the floor freezes everything after one view") {
    const Scene s = make_scene(331);
    const Model model = fitted_predictor(s, 332);
    SchedulerOptions opt = desk_options(s.graph.num_vertices());
    opt.source = ConfidenceSource::multi_view;
    opt.epsilon = 0.05;
    opt.conf_threshold = 0.05; // met by the single-view floor itself

    const PropagationResult r =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    for (const VertexState& st : r.states) {
        if (st.labeled) continue;
        CHECK(st.visits <= 1); // frozen after the first view, never revisited
        if (st.visits == 1) {
            CHECK(st.frozen);
            CHECK(st.confidence == 0.05);
        }
    }
}

TEST_CASE("a zero iteration budget leaves the graph untouched") {
    const Scene s = make_scene(341);
    const Model model = fitted_predictor(s, 342);
    SchedulerOptions opt = desk_options(s.graph.num_vertices());
    opt.max_iterations = 0;
    const PropagationResult r =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    CHECK(r.iterations == 0);
    CHECK(r.log.empty());
    CHECK_FALSE(r.confnet_trained);
    for (std::size_t v = 0; v < r.states.size(); ++v) {
        if (r.states[v].labeled) continue;
        CHECK(r.states[v].visits == 0);
        CHECK(r.states[v].confidence == opt.epsilon);
    }
}

TEST_CASE("the iteration budget is a hard ceiling") {
    const Scene s = make_scene(351);
    const Model model = fitted_predictor(s, 352);
    SchedulerOptions opt = desk_options(s.graph.num_vertices());
    opt.max_iterations = 5;
    const PropagationResult r =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    CHECK(r.iterations <= 5);
    CHECK(r.log.size() == r.iterations);
}

TEST_CASE("the combined source trains its confidence model midway") {
    const Scene s = make_scene(361);
    const Model model = fitted_predictor(s, 362);
    SchedulerOptions opt = desk_options(s.graph.num_vertices());
    opt.source = ConfidenceSource::combined;
    opt.eta = 0.1;
    opt.confnet_epochs = 60;

    const PropagationResult r =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    CHECK(r.confnet_trained);
    REQUIRE(r.confnet_score.size() == s.graph.num_vertices());
    for (double v : r.confnet_score) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    // unfrozen visited vertices carry the blended estimate
    for (std::size_t v = 0; v < r.states.size(); ++v) {
        const VertexState& st = r.states[v];
        if (st.labeled || st.frozen || st.visits == 0) continue;
        CHECK(st.confidence ==
              combined_confidence(r.multi_view_conf[v], r.confnet_score[v]));
    }

    // an unworkable training fraction flags infeasible and keeps running
    SchedulerOptions bad = opt;
    bad.eta = 0.9; // two sides would need more vertices than exist
    const PropagationResult rb =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, bad);
    CHECK_FALSE(rb.confnet_trained);
    CHECK(rb.confnet_score.empty());
    CHECK(rb.iterations > 0);

    SchedulerOptions mv = opt;
    mv.source = ConfidenceSource::multi_view;
    const PropagationResult rm =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, mv);
    CHECK_FALSE(rm.confnet_trained);
}

TEST_CASE("the random source stays reproducible and in range") {
    const Scene s = make_scene(371);
    const Model model = fitted_predictor(s, 372);
    SchedulerOptions opt = desk_options(s.graph.num_vertices());
    opt.source = ConfidenceSource::random;
    opt.max_iterations = 40;

    const PropagationResult a =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    const PropagationResult b =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    for (std::size_t v = 0; v < a.states.size(); ++v) {
        CHECK(a.states[v].confidence == b.states[v].confidence);
        if (!a.states[v].labeled) {
            CHECK(a.states[v].confidence >= 0.0);
            CHECK(a.states[v].confidence <= 1.0);
        }
    }
    CHECK_FALSE(a.confnet_trained); // only the combined source trains it
}

TEST_CASE("several patches per round still cover the graph deterministically") {
    const Scene s = make_scene(381);
    const Model model = fitted_predictor(s, 382);
    SchedulerOptions opt = desk_options(s.graph.num_vertices());
    opt.source = ConfidenceSource::multi_view;
    opt.parallel_patches = 3;

    const PropagationResult a =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    const PropagationResult b =
        propagate(s.graph, s.features, s.seeds, s.num_classes, model, opt);
    CHECK(a.iterations == b.iterations);
    CHECK(a.log.size() == a.iterations);
    for (std::size_t v = 0; v < a.states.size(); ++v)
        CHECK(a.states[v].confidence == b.states[v].confidence);
    std::size_t visited = 0;
    for (const VertexState& st : a.states)
        if (!st.labeled && st.visits > 0) ++visited;
    CHECK(visited > 0);
}

TEST_CASE("invalid propagation inputs are rejected") {
    const Scene s = make_scene(391);
    const Model model = fitted_predictor(s, 392);
    SchedulerOptions opt = desk_options(s.graph.num_vertices());

    std::vector<int> short_seeds(s.seeds.begin(), s.seeds.end() - 1);
    CHECK_THROWS_AS(
        propagate(s.graph, s.features, short_seeds, s.num_classes, model, opt),
        std::invalid_argument);
    Matrix short_f(s.features.rows - 1, s.features.cols);
    CHECK_THROWS_AS(propagate(s.graph, short_f, s.seeds, s.num_classes, model, opt),
                    std::invalid_argument);
    SchedulerOptions bad = opt;
    bad.conf_threshold = 0.0;
    CHECK_THROWS_AS(propagate(s.graph, s.features, s.seeds, s.num_classes, model, bad),
                    std::invalid_argument);
    bad.conf_threshold = 1.5;
    CHECK_THROWS_AS(propagate(s.graph, s.features, s.seeds, s.num_classes, model, bad),
                    std::invalid_argument);
    std::vector<int> none(s.seeds.size(), -1);
    CHECK_THROWS_AS(propagate(s.graph, s.features, none, s.num_classes, model, opt),
                    std::invalid_argument);
}

TEST_CASE("the outlier threshold maximizes validation accuracy") {
    SUBCASE("separated populations split cleanly") {
        const std::vector<double> conf = {0.1, 0.2, 0.8, 0.9};
        const std::vector<int> truth = {-1, -1, 0, 1};
        const double t = determine_outlier_threshold(conf, truth);
        CHECK(t == doctest::Approx(0.5).epsilon(1e-12)); // midpoint of 0.2 and 0.8
        std::size_t correct = 0;
        for (std::size_t i = 0; i < conf.size(); ++i)
            if (truth[i] < 0 ? conf[i] < t : conf[i] >= t) ++correct;
        CHECK(correct == 4);
    }
    SUBCASE("identical confidences follow the majority") {
        const std::vector<double> conf = {0.5, 0.5, 0.5, 0.5};
        const std::vector<int> out_heavy = {-1, -1, -1, 0};
        const double t1 = determine_outlier_threshold(conf, out_heavy);
        CHECK(t1 > 0.5); // flag everything
        CHECK(t1 == std::nextafter(0.5, std::numeric_limits<double>::infinity()));
        const std::vector<int> in_heavy = {-1, 0, 1, 2};
        const double t2 = determine_outlier_threshold(conf, in_heavy);
        CHECK(t2 == 0.5); // flag nothing
    }
    SUBCASE("exact ties keep the smallest candidate") {
        const std::vector<double> conf = {0.5, 0.5};
        const std::vector<int> truth = {-1, 0};
        // flagging none or all both score one correct; the smaller wins
        CHECK(determine_outlier_threshold(conf, truth) == 0.5);
    }
    SUBCASE("the choice beats a dense grid of alternatives") {
        Rng rng(401);
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t n = 30;
            std::vector<double> conf(n);
            std::vector<int> truth(n);
            for (std::size_t i = 0; i < n; ++i) {
                truth[i] = (rng.uniform() < 0.4) ? -1 : static_cast<int>(rng.below(3));
                const double base = truth[i] < 0 ? 0.3 : 0.7;
                conf[i] = std::clamp(base + 0.4 * (rng.uniform() - 0.5), 0.0, 1.0);
            }
            truth[0] = -1; // both populations present
            truth[1] = 0;
            const double t = determine_outlier_threshold(conf, truth);
            auto acc = [&](double cut) {
                std::size_t c = 0;
                for (std::size_t i = 0; i < n; ++i)
                    if (truth[i] < 0 ? conf[i] < cut : conf[i] >= cut) ++c;
                return c;
            };
            const std::size_t best = acc(t);
            for (int gi = 0; gi <= 2000; ++gi)
                CHECK(best >= acc(-0.05 + 1.2 * gi / 2000.0));
        }
    }
    SUBCASE("degenerate validation sets are refused") {
        const std::vector<double> conf = {0.5, 0.6};
        CHECK_THROWS_AS(determine_outlier_threshold(conf, std::vector<int>{0, 1}),
                        DataError);
        CHECK_THROWS_AS(determine_outlier_threshold(conf, std::vector<int>{-1, -1}),
                        DataError);
        CHECK_THROWS_AS(determine_outlier_threshold({}, {}), std::invalid_argument);
        CHECK_THROWS_AS(determine_outlier_threshold(conf, std::vector<int>{0}),
                        std::invalid_argument);
    }
}

TEST_CASE("final labels cut below the threshold and argmax above it") {
    std::vector<int> seeds = {2, -1, -1, -1};
    auto states = init_states(seeds, 3);
    states[1].confidence = 0.3;
    states[1].prob = {0.2, 0.5, 0.3};
    states[2].confidence = 0.7;
    states[2].prob = {0.1, 0.45, 0.45}; // tie resolves to the lower class
    states[3].confidence = 0.9;
    states[3].prob = {0.05, 0.05, 0.9};

    const OutlierDecision d = finalize_labels(states, 0.5);
    CHECK(d.threshold == 0.5);
    CHECK(d.labels == std::vector<int>{2, -1, 1, 2});
    CHECK(d.confidence[0] == 1.0);
    CHECK(d.confidence[1] == 0.3);
    CHECK(d.confidence[3] == 0.9);

    // exactly at the threshold counts as kept
    const OutlierDecision at = finalize_labels(states, 0.9);
    CHECK(at.labels == std::vector<int>{2, -1, -1, 2});
}
