#include "relprop/patch_extract.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace relprop {

namespace {

double gain_term(const VertexState& s) {
    if (s.labeled || s.frozen) return 0.0;
    return 1.0 - s.confidence;
}

} // namespace

double expected_gain(const GraphPatch& patch, std::span<const VertexState> states) {
    double gain = 0.0;
    for (std::uint32_t v : patch.vertex_ids) gain += gain_term(states[v]);
    return gain;
}

std::optional<GraphPatch> extract_patch(const AffinityGraph& graph,
                                        std::span<const VertexState> states,
                                        std::uint32_t start,
                                        const ExtractorConfig& config) {
    const std::size_t n = graph.num_vertices();
    if (states.size() != n)
        throw std::invalid_argument("extract: state count does not match graph");
    if (start >= n) throw std::invalid_argument("extract: start out of range");
    if (!states[start].labeled && !states[start].frozen)
        throw std::invalid_argument("extract: start vertex " + std::to_string(start) +
                                    " is not in the high-confidence set");
    if (config.max_size == 0) return std::nullopt;

    std::vector<std::uint32_t> members{start};
    std::vector<char> in_patch(n, 0);
    in_patch[start] = 1;
    double gain = gain_term(states[start]);
    if (gain >= config.gain_threshold)
        return restrict_patch(graph, std::move(members), start);

    std::deque<std::uint32_t> queue{start};
    while (!queue.empty()) {
        const std::uint32_t u = queue.front();
        queue.pop_front();
        for (const Edge& e : graph.neighbors(u)) { // ascending vertex id
            if (in_patch[e.to]) continue;
            if (members.size() + 1 > config.max_size) return std::nullopt;
            in_patch[e.to] = 1;
            members.push_back(e.to);
            gain += gain_term(states[e.to]);
            if (gain >= config.gain_threshold)
                return restrict_patch(graph, std::move(members), start);
            queue.push_back(e.to);
        }
    }
    return std::nullopt; // component exhausted below the threshold
}

std::vector<std::uint32_t> exclusion_zone(const AffinityGraph& graph,
                                          std::uint32_t start, int hops) {
    if (start >= graph.num_vertices())
        throw std::invalid_argument("exclusion: start out of range");
    if (hops < 0) throw std::invalid_argument("exclusion: negative hop count");
    std::vector<char> seen(graph.num_vertices(), 0);
    seen[start] = 1;
    std::vector<std::uint32_t> frontier{start};
    std::vector<std::uint32_t> zone{start};
    for (int h = 0; h < hops && !frontier.empty(); ++h) {
        std::vector<std::uint32_t> next;
        for (std::uint32_t u : frontier)
            for (const Edge& e : graph.neighbors(u))
                if (!seen[e.to]) {
                    seen[e.to] = 1;
                    next.push_back(e.to);
                    zone.push_back(e.to);
                }
        frontier = std::move(next);
    }
    std::sort(zone.begin(), zone.end());
    return zone;
}

} // namespace relprop
