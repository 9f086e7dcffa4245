#include "relprop/bounds.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace relprop {

ViewStats view_stats(const std::vector<std::vector<double>>& views) {
    if (views.empty()) throw std::invalid_argument("view_stats: no views");
    const std::size_t m = views[0].size();
    if (m < 2) throw std::invalid_argument("view_stats: need at least two classes");
    for (std::size_t i = 0; i < views.size(); ++i) {
        if (views[i].size() != m)
            throw std::invalid_argument("view_stats: ragged view lengths");
        double sum = 0.0;
        for (double v : views[i]) {
            if (v < -1e-12 || v > 1.0 + 1e-12)
                throw std::invalid_argument("view_stats: entry outside [0,1] in view " +
                                            std::to_string(i));
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("view_stats: view " + std::to_string(i) +
                                        " does not sum to 1");
    }

    ViewStats s;
    s.mean.assign(m, 0.0);
    s.variance.assign(m, 0.0);
    const double n = static_cast<double>(views.size());
    for (const auto& view : views)
        for (std::size_t k = 0; k < m; ++k) s.mean[k] += view[k];
    for (std::size_t k = 0; k < m; ++k) s.mean[k] /= n;
    for (const auto& view : views)
        for (std::size_t k = 0; k < m; ++k) {
            const double d = view[k] - s.mean[k];
            s.variance[k] += d * d;
        }
    for (std::size_t k = 0; k < m; ++k) s.variance[k] /= n;

    s.peak = s.mean[0];
    for (std::size_t k = 1; k < m; ++k) s.peak = std::max(s.peak, s.mean[k]);
    const double logm = std::log(static_cast<double>(m));
    double h = 0.0;
    for (std::size_t k = 0; k < m; ++k)
        if (s.mean[k] > 0.0) h -= s.mean[k] * std::log(s.mean[k]) / logm;
    s.entropy = h;
    return s;
}

bool variance_bound_holds(const ViewStats& stats, double slack) {
    for (double var : stats.variance) {
        if (var > stats.peak + slack) return false;
        if (stats.peak > std::sqrt(std::max(0.0, 1.0 - var)) + slack) return false;
    }
    return true;
}

double entropy_envelope(double c, std::size_t m) {
    if (m < 2) throw std::invalid_argument("entropy_envelope: need m >= 2");
    const double lo = 1.0 / static_cast<double>(m);
    if (c < lo - 1e-12 || c > 1.0 + 1e-12)
        throw std::invalid_argument("entropy_envelope: peak outside [1/m, 1]");
    const double logm = std::log(static_cast<double>(m));
    double f = 0.0;
    if (c > 0.0) f -= c * std::log(c) / logm;
    const double rest = 1.0 - c;
    if (rest > 0.0)
        f -= rest * std::log(rest / static_cast<double>(m - 1)) / logm;
    return f;
}

bool entropy_bound_holds(const ViewStats& stats, double slack) {
    return stats.entropy <= entropy_envelope(stats.peak, stats.mean.size()) + slack;
}

bool envelope_nonincreasing(std::size_t m, std::size_t grid_points, double slack) {
    if (grid_points < 2) throw std::invalid_argument("envelope: need a real grid");
    const double lo = 1.0 / static_cast<double>(m);
    double prev = entropy_envelope(lo, m);
    for (std::size_t i = 1; i < grid_points; ++i) {
        const double c =
            lo + (1.0 - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        const double cur = entropy_envelope(std::min(c, 1.0), m);
        if (cur > prev + slack) return false;
        prev = cur;
    }
    return true;
}

} // namespace relprop
