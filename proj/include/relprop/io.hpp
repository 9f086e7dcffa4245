#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relprop/graph.hpp"
#include "relprop/matrix.hpp"

namespace relprop {

// Plain-text feature matrix: header "N d", then one row per line.
// Values are written with 17 significant digits so reloading is exact.
void save_features(const std::string& path, const Matrix& features);
Matrix load_features(const std::string& path);

// Edge list: header "N E", then "i j w" with i < j, one undirected edge per
// line, ascending (i, j). Weights carry 9 significant digits.
void save_graph(const std::string& path, const AffinityGraph& graph);
AffinityGraph load_graph(const std::string& path);

// Ground-truth labels: "vertex_id label", label -1 for out-of-class vertices.
void save_truth(const std::string& path, const std::vector<int>& labels);
std::vector<int> load_truth(const std::string& path);

// Split assignment: "vertex_id split" with split in {L, V, U}.
void save_splits(const std::string& path, const std::vector<char>& splits);
std::vector<char> load_splits(const std::string& path);

// Predicted labels: "vertex_id y_hat confidence".
struct LabelRow {
    std::uint32_t vertex = 0;
    int label = -1;
    double confidence = 0.0;
};
void save_labels(const std::string& path, const std::vector<LabelRow>& rows);
std::vector<LabelRow> load_labels(const std::string& path);

// Per-vertex confidence dump: "vertex_id visits confidence is_outlier_pred".
struct ConfidenceRow {
    std::uint32_t vertex = 0;
    std::uint32_t visits = 0;
    double confidence = 0.0;
    int is_outlier_pred = 0;
};
void save_confidence_dump(const std::string& path,
                          const std::vector<ConfidenceRow>& rows);
std::vector<ConfidenceRow> load_confidence_dump(const std::string& path);

// Propagation trace: "iter start_vertex patch_size gain frozen_total mean_conf".
struct IterationRecord {
    std::size_t iter = 0;
    std::uint32_t start_vertex = 0;
    std::size_t patch_size = 0;
    double gain = 0.0;
    std::size_t frozen_total = 0;
    double mean_conf = 0.0;
};
void save_iteration_log(const std::string& path,
                        const std::vector<IterationRecord>& records);

} // namespace relprop
