#include "relprop/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "relprop/util.hpp"

namespace relprop {

std::size_t AffinityGraph::num_edges() const {
    std::size_t deg = 0;
    for (const auto& list : adj) deg += list.size();
    return deg / 2;
}

double AffinityGraph::weight(std::uint32_t i, std::uint32_t j) const {
    const auto& list = adj[i];
    auto it = std::lower_bound(list.begin(), list.end(), j,
                               [](const Edge& e, std::uint32_t v) { return e.to < v; });
    if (it != list.end() && it->to == j) return it->weight;
    return 0.0;
}

namespace {

Matrix normalize_rows(const Matrix& features) {
    Matrix out(features.rows, features.cols);
    for (std::size_t i = 0; i < features.rows; ++i) {
        double sq = 0.0;
        for (std::size_t c = 0; c < features.cols; ++c) {
            const double v = features.at(i, c);
            if (!std::isfinite(v))
                throw DataError("feature row " + std::to_string(i) +
                                " has a non-finite entry");
            sq += v * v;
        }
        const double norm = std::sqrt(sq);
        if (norm == 0.0)
            throw DataError("feature row " + std::to_string(i) + " has zero norm");
        for (std::size_t c = 0; c < features.cols; ++c)
            out.at(i, c) = features.at(i, c) / norm;
    }
    return out;
}

} // namespace

AffinityGraph build_knn_graph(const Matrix& features, std::size_t k,
                              unsigned workers) {
    const std::size_t n = features.rows;
    if (n == 0 || features.cols == 0)
        throw DataError("knn: empty feature matrix");
    if (k == 0) throw DataError("knn: k must be positive");
    if (k >= n)
        throw DataError("knn: k=" + std::to_string(k) + " must be below n=" +
                        std::to_string(n));

    const Matrix unit = normalize_rows(features);
    const std::size_t d = unit.cols;

    // per-vertex top-k picks, deterministic regardless of worker count
    std::vector<std::vector<std::uint32_t>> picks(n);
    auto pick_rows = [&](std::size_t lo, std::size_t hi) {
        std::vector<double> sim(n);
        std::vector<std::uint32_t> order;
        for (std::size_t i = lo; i < hi; ++i) {
            const double* ui = unit.data.data() + i * d;
            for (std::size_t j = 0; j < n; ++j) {
                const double* uj = unit.data.data() + j * d;
                double s = 0.0;
                for (std::size_t c = 0; c < d; ++c) s += ui[c] * uj[c];
                sim[j] = std::clamp(s, -1.0, 1.0);
            }
            order.resize(n);
            std::iota(order.begin(), order.end(), 0u);
            order.erase(order.begin() + static_cast<std::ptrdiff_t>(i)); // no self edge
            auto better = [&](std::uint32_t a, std::uint32_t b) {
                if (sim[a] != sim[b]) return sim[a] > sim[b];
                return a < b;
            };
            std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                             order.end(), better);
            order.resize(k);
            std::sort(order.begin(), order.end(), better);
            picks[i].assign(order.begin(), order.end());
        }
    };
    if (workers <= 1 || n < 2 * workers) {
        pick_rows(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t lo = std::min(n, w * chunk);
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo < hi) pool.emplace_back(pick_rows, lo, hi);
        }
        for (auto& t : pool) t.join();
    }

    AffinityGraph g;
    g.adj.assign(n, {});
    auto dot = [&](std::uint32_t a, std::uint32_t b) {
        const double* ua = unit.data.data() + a * d;
        const double* ub = unit.data.data() + b * d;
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += ua[c] * ub[c];
        return std::clamp(s, -1.0, 1.0);
    };
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j : picks[i]) {
            const double w = dot(i, j);
            g.adj[i].push_back({j, w});
            g.adj[j].push_back({i, w});
        }
    }
    for (auto& list : g.adj) {
        std::sort(list.begin(), list.end(),
                  [](const Edge& a, const Edge& b) { return a.to < b.to; });
        list.erase(std::unique(list.begin(), list.end(),
                               [](const Edge& a, const Edge& b) { return a.to == b.to; }),
                   list.end());
    }
    return g;
}

GraphPatch restrict_patch(const AffinityGraph& graph,
                          std::vector<std::uint32_t> vertex_ids,
                          std::uint32_t start) {
    const std::size_t n = graph.num_vertices();
    if (vertex_ids.empty()) throw std::invalid_argument("restrict: empty vertex set");
    std::vector<std::int32_t> local(n, -1);
    for (std::size_t i = 0; i < vertex_ids.size(); ++i) {
        const std::uint32_t v = vertex_ids[i];
        if (v >= n)
            throw std::invalid_argument("restrict: vertex " + std::to_string(v) +
                                        " out of range");
        if (local[v] >= 0)
            throw std::invalid_argument("restrict: duplicate vertex " + std::to_string(v));
        local[v] = static_cast<std::int32_t>(i);
    }
    if (start >= n || local[start] < 0)
        throw std::invalid_argument("restrict: start vertex not in patch");

    GraphPatch patch;
    patch.start_vertex = start;
    patch.local_adj.resize(vertex_ids.size());
    for (std::size_t i = 0; i < vertex_ids.size(); ++i) {
        for (const Edge& e : graph.neighbors(vertex_ids[i])) {
            if (local[e.to] >= 0)
                patch.local_adj[i].push_back({static_cast<std::uint32_t>(local[e.to]), e.weight});
        }
        std::sort(patch.local_adj[i].begin(), patch.local_adj[i].end(),
                  [](const Edge& a, const Edge& b) { return a.to < b.to; });
    }
    patch.vertex_ids = std::move(vertex_ids);
    return patch;
}

} // namespace relprop
