#pragma once

#include <cstddef>
#include <vector>

namespace relprop {

// Statistics over a set of probability-vector views of one vertex.
struct ViewStats {
    std::vector<double> mean;     // coordinate-wise average
    std::vector<double> variance; // population variance per coordinate
    double peak = 0.0;            // largest coordinate of the mean
    double entropy = 0.0;         // entropy of the mean, log base m
};

// Validates the views (same length m >= 2, entries in [0,1], rows sum to 1)
// and computes their statistics.
ViewStats view_stats(const std::vector<std::vector<double>>& views);

// Every coordinate variance sits below the peak, and the peak below
// sqrt(1 - variance): sigma_k^2 <= c <= sqrt(1 - sigma_k^2).
bool variance_bound_holds(const ViewStats& stats, double slack = 1e-9);

// Entropy of the mean never exceeds the envelope determined by its peak.
bool entropy_bound_holds(const ViewStats& stats, double slack = 1e-9);

// The envelope itself: highest base-m entropy a distribution with peak c can
// reach, f(c) = -c log_m c - (1-c) log_m((1-c)/(m-1)), defined on [1/m, 1].
double entropy_envelope(double c, std::size_t m);

// f is non-increasing across [1/m, 1]; checked on a uniform grid.
bool envelope_nonincreasing(std::size_t m, std::size_t grid_points,
                            double slack = 1e-9);

} // namespace relprop
