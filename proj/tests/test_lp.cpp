#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "relprop/lp.hpp"
#include "relprop/rng.hpp"

using namespace relprop;

namespace {

struct E3 {
    std::uint32_t a, b;
    double w;
};

AffinityGraph make_graph(std::size_t n, const std::vector<E3>& edges) {
    AffinityGraph g;
    g.adj.assign(n, {});
    for (const E3& e : edges) {
        g.adj[e.a].push_back({e.b, e.w});
        g.adj[e.b].push_back({e.a, e.w});
    }
    for (auto& list : g.adj)
        std::sort(list.begin(), list.end(),
                  [](const Edge& x, const Edge& y) { return x.to < y.to; });
    return g;
}

// dense replay with the same sweep count: full matrix row, ascending order,
// so the arithmetic matches term for term
Matrix dense_replay(const AffinityGraph& g, std::span<const int> seeds,
                    std::size_t m, std::size_t sweeps) {
    const std::size_t n = g.num_vertices();
    Matrix a(n, n);
    for (std::uint32_t v = 0; v < n; ++v)
        for (const Edge& e : g.neighbors(v)) a.at(v, e.to) = e.weight;

    Matrix p(n, m);
    for (std::size_t v = 0; v < n; ++v) {
        if (seeds[v] >= 0)
            p.at(v, static_cast<std::size_t>(seeds[v])) = 1.0;
        else
            for (std::size_t k = 0; k < m; ++k) p.at(v, k) = 1.0 / static_cast<double>(m);
    }
    std::vector<double> row_sum(n, 0.0);
    for (std::uint32_t v = 0; v < n; ++v)
        for (const Edge& e : g.neighbors(v)) row_sum[v] += e.weight;

    Matrix next(n, m);
    for (std::size_t s = 0; s < sweeps; ++s) {
        for (std::size_t v = 0; v < n; ++v) {
            if (seeds[v] >= 0 || row_sum[v] <= 0.0) {
                for (std::size_t k = 0; k < m; ++k) next.at(v, k) = p.at(v, k);
                continue;
            }
            for (std::size_t k = 0; k < m; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += a.at(v, j) * p.at(j, k);
                next.at(v, k) = acc * (1.0 / row_sum[v]);
            }
        }
        std::swap(p.data, next.data);
    }
    return p;
}

} // namespace

TEST_CASE("a bridging vertex splits the difference of its two anchors") {
    const AffinityGraph g = make_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    const std::vector<int> seeds = {0, -1, 1};
    const LPResult r = run_lp(g, seeds, 2, {});
    CHECK(r.probs.at(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.probs.at(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.confidence[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.sweeps >= 1);
}

TEST_CASE("edge weights tilt the blend") {
    const AffinityGraph g = make_graph(3, {{0, 1, 3.0}, {1, 2, 1.0}});
    const std::vector<int> seeds = {0, -1, 1};
    const LPResult r = run_lp(g, seeds, 2, {});
    CHECK(r.probs.at(1, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r.probs.at(1, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.confidence[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("labeled rows never move from their one-hot vectors") {
    Rng rng(201);
    Matrix f(30, 4);
    for (double& v : f.data) v = rng.normal();
    const AffinityGraph g = build_knn_graph(f, 4);
    std::vector<int> seeds(30, -1);
    seeds[0] = 0;
    seeds[7] = 1;
    seeds[15] = 2;
    const LPResult r = run_lp(g, seeds, 3, {});
    for (std::size_t v : {0, 7, 15}) {
        for (std::size_t k = 0; k < 3; ++k) {
            const double want = (static_cast<int>(k) == seeds[v]) ? 1.0 : 0.0;
            CHECK(r.probs.at(v, k) == want); // exact, clamping is bitwise
        }
        CHECK(r.confidence[v] == 1.0);
    }
}

TEST_CASE("a vertex with no edges keeps the uniform start") {
    AffinityGraph g = make_graph(3, {{0, 1, 1.0}});
    const std::vector<int> seeds = {0, -1, -1};
    const LPResult r = run_lp(g, seeds, 4, {});
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(r.probs.at(2, k) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(r.confidence[2] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("a chain relaxes to the harmonic interpolation") {
    const AffinityGraph g =
        make_graph(5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}});
    const std::vector<int> seeds = {0, -1, -1, -1, 1};
    LPConfig cfg;
    cfg.tolerance = 1e-12;
    cfg.max_sweeps = 100000;
    const LPResult r = run_lp(g, seeds, 2, cfg);
    for (std::size_t v = 0; v < 5; ++v) {
        const double frac = static_cast<double>(v) / 4.0;
        CHECK(r.probs.at(v, 1) == doctest::Approx(frac).epsilon(1e-6));
        CHECK(r.probs.at(v, 0) == doctest::Approx(1.0 - frac).epsilon(1e-6));
    }
}

TEST_CASE("sparse sweeps agree with a dense replay exactly") {
    Rng rng(203);
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t n = 40;
        Matrix f(n, 5);
        for (double& v : f.data) v = rng.normal();
        const AffinityGraph g = build_knn_graph(f, 4);
        std::vector<int> seeds(n, -1);
        for (std::uint32_t v = 0; v < n; ++v)
            if (rng.uniform() < 0.2) seeds[v] = static_cast<int>(rng.below(3));
        if (std::all_of(seeds.begin(), seeds.end(), [](int s) { return s < 0; }))
            seeds[0] = 0;

        LPConfig cfg;
        cfg.max_sweeps = 7; // fixed horizon, no early stop ambiguity
        cfg.tolerance = 0.0;
        const LPResult r = run_lp(g, seeds, 3, cfg);
        CHECK(r.sweeps == 7);
        const Matrix want = dense_replay(g, seeds, 3, 7);
        CHECK(r.probs.data == want.data); // identical accumulation order

        for (std::size_t v = 0; v < n; ++v) {
            double sum = 0.0, peak = 0.0;
            for (std::size_t k = 0; k < 3; ++k) {
                sum += r.probs.at(v, k);
                peak = std::max(peak, r.probs.at(v, k));
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(r.confidence[v] == peak);
        }
    }
}

TEST_CASE("the sweep budget is honored") {
    const AffinityGraph g =
        make_graph(6, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}, {4, 5, 1.0}});
    const std::vector<int> seeds = {0, -1, -1, -1, -1, 1};
    LPConfig cfg;
    cfg.max_sweeps = 3;
    cfg.tolerance = 0.0;
    const LPResult r = run_lp(g, seeds, 2, cfg);
    CHECK(r.sweeps == 3);
}

TEST_CASE("bad inputs are rejected") {
    const AffinityGraph g = make_graph(3, {{0, 1, 1.0}});
    const std::vector<int> ok = {0, -1, -1};
    CHECK_THROWS_AS(run_lp(g, std::vector<int>{0, -1}, 2, {}), std::invalid_argument);
    CHECK_THROWS_AS(run_lp(g, ok, 1, {}), std::invalid_argument);
    CHECK_THROWS_AS(run_lp(g, std::vector<int>{5, -1, -1}, 2, {}), std::invalid_argument);
    CHECK_THROWS_AS(run_lp(g, std::vector<int>{-1, -1, -1}, 2, {}), std::invalid_argument);
}
