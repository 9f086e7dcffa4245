#include "relprop/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "relprop/util.hpp"

namespace relprop {

namespace {

struct File {
    std::FILE* fp = nullptr;
    explicit File(const std::string& path) {
        fp = std::fopen(path.c_str(), "wb");
        if (!fp) throw DataError("cannot open " + path + " for writing");
    }
    ~File() {
        if (fp) std::fclose(fp);
    }
    File(const File&) = delete;
    File& operator=(const File&) = delete;
};

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

[[noreturn]] void bad_file(const std::string& path, const std::string& what) {
    throw DataError(path + ": " + what);
}

} // namespace

void save_features(const std::string& path, const Matrix& features) {
    File f(path);
    std::fprintf(f.fp, "%zu %zu\n", features.rows, features.cols);
    for (std::size_t i = 0; i < features.rows; ++i) {
        for (std::size_t c = 0; c < features.cols; ++c)
            std::fprintf(f.fp, c ? " %.17g" : "%.17g", features.at(i, c));
        std::fputc('\n', f.fp);
    }
}

Matrix load_features(const std::string& path) {
    auto in = open_in(path);
    std::size_t n = 0, d = 0;
    if (!(in >> n >> d) || n == 0 || d == 0) bad_file(path, "bad feature header");
    Matrix m(n, d);
    for (std::size_t i = 0; i < n * d; ++i)
        if (!(in >> m.data[i])) bad_file(path, "truncated feature matrix");
    return m;
}

void save_graph(const std::string& path, const AffinityGraph& graph) {
    File f(path);
    std::fprintf(f.fp, "%zu %zu\n", graph.num_vertices(), graph.num_edges());
    for (std::uint32_t i = 0; i < graph.num_vertices(); ++i)
        for (const Edge& e : graph.neighbors(i))
            if (i < e.to) std::fprintf(f.fp, "%u %u %.9g\n", i, e.to, e.weight);
}

AffinityGraph load_graph(const std::string& path) {
    auto in = open_in(path);
    std::size_t n = 0, m = 0;
    if (!(in >> n >> m)) bad_file(path, "bad graph header");
    AffinityGraph g;
    g.adj.assign(n, {});
    for (std::size_t e = 0; e < m; ++e) {
        std::uint32_t i = 0, j = 0;
        double w = 0.0;
        if (!(in >> i >> j >> w)) bad_file(path, "truncated edge list");
        if (i >= j || j >= n) bad_file(path, "bad edge " + std::to_string(i) + " " + std::to_string(j));
        g.adj[i].push_back({j, w});
        g.adj[j].push_back({i, w});
    }
    return g;
}

void save_truth(const std::string& path, const std::vector<int>& labels) {
    File f(path);
    for (std::size_t v = 0; v < labels.size(); ++v)
        std::fprintf(f.fp, "%zu %d\n", v, labels[v]);
}

std::vector<int> load_truth(const std::string& path) {
    auto in = open_in(path);
    std::vector<int> labels;
    std::size_t v = 0;
    int y = 0;
    while (in >> v >> y) {
        if (v != labels.size()) bad_file(path, "vertex ids not consecutive");
        labels.push_back(y);
    }
    if (labels.empty()) bad_file(path, "no label rows");
    return labels;
}

void save_splits(const std::string& path, const std::vector<char>& splits) {
    File f(path);
    for (std::size_t v = 0; v < splits.size(); ++v)
        std::fprintf(f.fp, "%zu %c\n", v, splits[v]);
}

std::vector<char> load_splits(const std::string& path) {
    auto in = open_in(path);
    std::vector<char> splits;
    std::size_t v = 0;
    char s = 0;
    while (in >> v >> s) {
        if (v != splits.size()) bad_file(path, "vertex ids not consecutive");
        if (s != 'L' && s != 'V' && s != 'U') bad_file(path, "unknown split tag");
        splits.push_back(s);
    }
    if (splits.empty()) bad_file(path, "no split rows");
    return splits;
}

void save_labels(const std::string& path, const std::vector<LabelRow>& rows) {
    File f(path);
    for (const LabelRow& r : rows)
        std::fprintf(f.fp, "%u %d %.9g\n", r.vertex, r.label, r.confidence);
}

std::vector<LabelRow> load_labels(const std::string& path) {
    auto in = open_in(path);
    std::vector<LabelRow> rows;
    LabelRow r;
    while (in >> r.vertex >> r.label >> r.confidence) rows.push_back(r);
    if (rows.empty()) bad_file(path, "no label rows");
    return rows;
}

void save_confidence_dump(const std::string& path,
                          const std::vector<ConfidenceRow>& rows) {
    File f(path);
    for (const ConfidenceRow& r : rows)
        std::fprintf(f.fp, "%u %u %.9g %d\n", r.vertex, r.visits, r.confidence,
                     r.is_outlier_pred);
}

std::vector<ConfidenceRow> load_confidence_dump(const std::string& path) {
    auto in = open_in(path);
    std::vector<ConfidenceRow> rows;
    ConfidenceRow r;
    while (in >> r.vertex >> r.visits >> r.confidence >> r.is_outlier_pred)
        rows.push_back(r);
    if (rows.empty()) bad_file(path, "no confidence rows");
    return rows;
}

void save_iteration_log(const std::string& path,
                        const std::vector<IterationRecord>& records) {
    File f(path);
    for (const IterationRecord& r : records)
        std::fprintf(f.fp, "%zu %u %zu %.9g %zu %.9g\n", r.iter, r.start_vertex,
                     r.patch_size, r.gain, r.frozen_total, r.mean_conf);
}

} // namespace relprop
