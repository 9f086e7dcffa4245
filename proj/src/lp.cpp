#include "relprop/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "relprop/util.hpp"

namespace relprop {

LPResult run_lp(const AffinityGraph& graph, std::span<const int> seed_labels,
                int num_classes, const LPConfig& config) {
    const std::size_t n = graph.num_vertices();
    if (seed_labels.size() != n)
        throw std::invalid_argument("lp: seed label count does not match graph");
    if (num_classes < 2) throw std::invalid_argument("lp: need at least two classes");
    const std::size_t m = static_cast<std::size_t>(num_classes);

    bool any_labeled = false;
    LPResult res;
    res.probs = Matrix(n, m);
    for (std::size_t v = 0; v < n; ++v) {
        if (seed_labels[v] >= 0) {
            if (seed_labels[v] >= num_classes)
                throw std::invalid_argument("lp: label out of range at vertex " +
                                            std::to_string(v));
            res.probs.at(v, static_cast<std::size_t>(seed_labels[v])) = 1.0;
            any_labeled = true;
        } else {
            for (std::size_t k = 0; k < m; ++k)
                res.probs.at(v, k) = 1.0 / static_cast<double>(m);
        }
    }
    if (!any_labeled) throw std::invalid_argument("lp: no labeled vertices");

    std::vector<double> row_sum(n, 0.0);
    for (std::uint32_t v = 0; v < n; ++v)
        for (const Edge& e : graph.neighbors(v)) row_sum[v] += e.weight;

    Matrix next(n, m);
    for (std::size_t sweep = 0; sweep < config.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (std::uint32_t v = 0; v < n; ++v) {
            double* nv = next.data.data() + v * m;
            if (seed_labels[v] >= 0 || row_sum[v] <= 0.0) {
                const double* pv = res.probs.data.data() + v * m;
                std::copy(pv, pv + m, nv);
                continue;
            }
            std::fill(nv, nv + m, 0.0);
            for (const Edge& e : graph.neighbors(v)) {
                const double* pj = res.probs.data.data() + e.to * m;
                for (std::size_t k = 0; k < m; ++k) nv[k] += e.weight * pj[k];
            }
            const double inv = 1.0 / row_sum[v];
            for (std::size_t k = 0; k < m; ++k) {
                nv[k] *= inv;
                if (!std::isfinite(nv[k])) throw NumericError("lp: sweep diverged");
            }
        }
        for (std::size_t i = 0; i < next.data.size(); ++i)
            max_change = std::max(max_change, std::abs(next.data[i] - res.probs.data[i]));
        std::swap(res.probs.data, next.data);
        res.sweeps = sweep + 1;
        if (max_change < config.tolerance) break;
    }

    res.confidence.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        const double* pv = res.probs.data.data() + v * m;
        res.confidence[v] = *std::max_element(pv, pv + m);
    }
    return res;
}

} // namespace relprop
