#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "relprop/confidence.hpp"
#include "relprop/graph.hpp"

namespace relprop {

struct ExtractorConfig {
    double gain_threshold = 500.0; // required expected gain
    std::size_t max_size = 3000;   // hard cap on patch vertex count
    int exclusion_hops = 1;        // neighbourhood retired around a used start
};

// Sum of (1 - confidence) over the unlabeled, unfrozen members of a patch:
// how much certainty the patch can still earn.
double expected_gain(const GraphPatch& patch, std::span<const VertexState> states);

// Grows a patch by breadth-first expansion from start (which must be labeled
// or frozen). Neighbours enter the queue in ascending vertex id; after every
// added vertex the accumulated gain is compared against the threshold and the
// first crossing wins. Returns nothing when the cap would be exceeded or the
// reachable component runs out first.
std::optional<GraphPatch> extract_patch(const AffinityGraph& graph,
                                        std::span<const VertexState> states,
                                        std::uint32_t start,
                                        const ExtractorConfig& config);

// Vertices within hops steps of start (including start), ascending order.
std::vector<std::uint32_t> exclusion_zone(const AffinityGraph& graph,
                                          std::uint32_t start, int hops);

} // namespace relprop
