#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "relprop/matrix.hpp"

namespace relprop {

struct Edge {
    std::uint32_t to = 0;
    double weight = 0.0;
};

// Sparse symmetric affinity graph. Neighbor lists are sorted by vertex id
// and never contain self-edges.
struct AffinityGraph {
    std::vector<std::vector<Edge>> adj;

    std::size_t num_vertices() const { return adj.size(); }
    std::span<const Edge> neighbors(std::uint32_t v) const { return adj[v]; }

    // undirected edge count
    std::size_t num_edges() const;

    // 0 when the edge is absent
    double weight(std::uint32_t i, std::uint32_t j) const;
};

// Vertex subset with the adjacency restricted to it. Edges in local_adj
// use positions in vertex_ids, not global ids.
struct GraphPatch {
    std::vector<std::uint32_t> vertex_ids;
    std::uint32_t start_vertex = 0; // global id
    std::vector<std::vector<Edge>> local_adj;

    std::size_t size() const { return vertex_ids.size(); }
};

// Cosine k-nearest-neighbour graph, symmetrized by edge union: i~j is kept
// when either endpoint selects the other. Weights are clamped to [-1, 1].
// Neighbour ranking ties break toward the lower vertex id.
AffinityGraph build_knn_graph(const Matrix& features, std::size_t k,
                              unsigned workers = 1);

// Induced subgraph on vertex_ids (kept in the given order). All ids must be
// valid, unique, and include start.
GraphPatch restrict_patch(const AffinityGraph& graph,
                          std::vector<std::uint32_t> vertex_ids,
                          std::uint32_t start);

} // namespace relprop
