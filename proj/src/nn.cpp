#include "relprop/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "relprop/util.hpp"

namespace relprop {

namespace {

std::vector<double> augmented_row_sums(const GraphPatch& patch) {
    std::vector<double> sums(patch.size(), 1.0); // self loop
    for (std::size_t i = 0; i < patch.size(); ++i)
        for (const Edge& e : patch.local_adj[i]) sums[i] += e.weight;
    for (std::size_t i = 0; i < patch.size(); ++i)
        if (sums[i] == 0.0)
            throw NumericError("aggregate: zero row sum at patch vertex " +
                               std::to_string(i));
    return sums;
}

} // namespace

Matrix normalized_aggregate(const GraphPatch& patch, const Matrix& values) {
    if (values.rows != patch.size())
        throw std::invalid_argument("aggregate: row count does not match patch");
    const auto sums = augmented_row_sums(patch);
    Matrix out(values.rows, values.cols);
    for (std::size_t i = 0; i < patch.size(); ++i) {
        double* oi = out.data.data() + i * out.cols;
        const double* vi = values.data.data() + i * values.cols;
        for (std::size_t c = 0; c < values.cols; ++c) oi[c] = vi[c];
        for (const Edge& e : patch.local_adj[i]) {
            const double* vj = values.data.data() + e.to * values.cols;
            for (std::size_t c = 0; c < values.cols; ++c) oi[c] += e.weight * vj[c];
        }
        const double inv = 1.0 / sums[i];
        for (std::size_t c = 0; c < values.cols; ++c) oi[c] *= inv;
    }
    return out;
}

Matrix normalized_aggregate_transpose(const GraphPatch& patch, const Matrix& values) {
    if (values.rows != patch.size())
        throw std::invalid_argument("aggregate: row count does not match patch");
    const auto sums = augmented_row_sums(patch);
    Matrix out(values.rows, values.cols);
    for (std::size_t i = 0; i < patch.size(); ++i) {
        const double inv = 1.0 / sums[i];
        const double* vi = values.data.data() + i * values.cols;
        double* oi = out.data.data() + i * out.cols;
        for (std::size_t c = 0; c < values.cols; ++c) oi[c] += inv * vi[c];
        for (const Edge& e : patch.local_adj[i]) {
            double* oj = out.data.data() + e.to * out.cols;
            const double scale = e.weight * inv;
            for (std::size_t c = 0; c < values.cols; ++c) oj[c] += scale * vi[c];
        }
    }
    return out;
}

Matrix gcn_forward(const GraphPatch& patch, const Matrix& features,
                   const std::vector<Matrix>& weights, ForwardCache* cache) {
    if (weights.empty()) throw std::invalid_argument("gcn: no weights");
    if (features.rows != patch.size())
        throw std::invalid_argument("gcn: feature rows do not match patch");
    if (cache) {
        *cache = ForwardCache{};
        cache->patch = &patch;
        cache->relu_hidden = true;
    }
    Matrix h = features;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (h.cols != weights[l].rows)
            throw std::invalid_argument("gcn: dimension mismatch at layer " +
                                        std::to_string(l));
        Matrix agg = normalized_aggregate(patch, h);
        Matrix z = matmul(agg, weights[l]);
        if (cache) {
            cache->aggregated.push_back(std::move(agg));
            cache->preact.push_back(z);
        }
        if (l + 1 < weights.size())
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
        h = std::move(z);
    }
    if (cache) cache->filled = true;
    return h;
}

Matrix sgc_forward(const GraphPatch& patch, const Matrix& features, int depth,
                   const Matrix& classifier, ForwardCache* cache) {
    if (depth < 1) throw std::invalid_argument("sgc: depth must be positive");
    if (features.rows != patch.size())
        throw std::invalid_argument("sgc: feature rows do not match patch");
    if (features.cols != classifier.rows)
        throw std::invalid_argument("sgc: classifier dimension mismatch");
    Matrix smooth = features;
    for (int r = 0; r < depth; ++r) smooth = normalized_aggregate(patch, smooth);
    Matrix logits = matmul(smooth, classifier);
    if (cache) {
        *cache = ForwardCache{};
        cache->patch = &patch;
        cache->relu_hidden = false;
        cache->aggregated.push_back(std::move(smooth));
        cache->preact.push_back(logits);
        cache->filled = true;
    }
    return logits;
}

std::vector<Matrix> backward(const ForwardCache& cache,
                             const std::vector<Matrix>& weights,
                             const Matrix& grad_logits) {
    if (!cache.filled || !cache.patch)
        throw std::invalid_argument("backward: cache not filled by a forward pass");
    if (cache.aggregated.size() != weights.size() ||
        cache.preact.size() != weights.size())
        throw std::invalid_argument("backward: cache does not match weights");
    if (!grad_logits.same_shape(cache.preact.back()))
        throw std::invalid_argument("backward: gradient shape mismatch");

    std::vector<Matrix> grads(weights.size());
    Matrix delta = grad_logits; // gradient wrt current block pre-activation
    for (std::size_t l = weights.size(); l-- > 0;) {
        if (cache.relu_hidden && l + 1 < weights.size()) {
            // delta arrives wrt the block output; apply the ReLU mask
            const Matrix& z = cache.preact[l];
            for (std::size_t i = 0; i < delta.data.size(); ++i)
                if (z.data[i] <= 0.0) delta.data[i] = 0.0;
        }
        grads[l] = transpose_matmul(cache.aggregated[l], delta);
        if (l > 0) {
            Matrix back = matmul_transpose(delta, weights[l]);
            delta = normalized_aggregate_transpose(*cache.patch, back);
        }
    }
    return grads;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* zi = logits.data.data() + i * logits.cols;
        double* oi = out.data.data() + i * out.cols;
        double mx = zi[0];
        for (std::size_t c = 1; c < logits.cols; ++c) mx = std::max(mx, zi[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) {
            oi[c] = std::exp(zi[c] - mx);
            sum += oi[c];
        }
        for (std::size_t c = 0; c < logits.cols; ++c) oi[c] /= sum;
    }
    return out;
}

LossGrad softmax_xent(const Matrix& logits, std::span<const int> labels,
                      std::span<const std::uint8_t> mask) {
    if (labels.size() != logits.rows || mask.size() != logits.rows)
        throw std::invalid_argument("xent: label or mask size mismatch");
    std::size_t count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) {
            if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= logits.cols)
                throw std::invalid_argument("xent: label out of range at row " +
                                            std::to_string(i));
            ++count;
        }
    if (count == 0) throw std::invalid_argument("xent: empty mask");

    LossGrad lg;
    lg.grad = Matrix(logits.rows, logits.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (!mask[i]) continue;
        const double* zi = logits.data.data() + i * logits.cols;
        double* gi = lg.grad.data.data() + i * logits.cols;
        double mx = zi[0];
        for (std::size_t c = 1; c < logits.cols; ++c) mx = std::max(mx, zi[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) sum += std::exp(zi[c] - mx);
        const double lse = mx + std::log(sum);
        total += lse - zi[labels[i]];
        for (std::size_t c = 0; c < logits.cols; ++c)
            gi[c] = std::exp(zi[c] - lse) / static_cast<double>(count);
        gi[labels[i]] -= 1.0 / static_cast<double>(count);
    }
    lg.value = total / static_cast<double>(count);
    if (!std::isfinite(lg.value)) throw NumericError("xent: non-finite loss");
    return lg;
}

LossGrad sigmoid_bce(const Matrix& logits, std::span<const std::uint8_t> targets,
                     std::span<const std::uint8_t> mask) {
    if (logits.cols != 1) throw std::invalid_argument("bce: logits must be one column");
    if (targets.size() != logits.rows || mask.size() != logits.rows)
        throw std::invalid_argument("bce: target or mask size mismatch");
    std::size_t count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) ++count;
    if (count == 0) throw std::invalid_argument("bce: empty mask");

    LossGrad lg;
    lg.grad = Matrix(logits.rows, 1);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (!mask[i]) continue;
        const double z = logits.at(i, 0);
        const double t = targets[i] ? 1.0 : 0.0;
        total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
        const double sig = 1.0 / (1.0 + std::exp(-z));
        lg.grad.at(i, 0) = (sig - t) / static_cast<double>(count);
    }
    lg.value = total / static_cast<double>(count);
    if (!std::isfinite(lg.value)) throw NumericError("bce: non-finite loss");
    return lg;
}

AdamState make_adam(const std::vector<Matrix>& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const Matrix& p : params) {
        s.m.emplace_back(p.rows, p.cols);
        s.v.emplace_back(p.rows, p.cols);
    }
    return s;
}

void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam: parameter list mismatch");
    for (std::size_t l = 0; l < params.size(); ++l)
        if (!params[l].same_shape(grads[l]))
            throw std::invalid_argument("adam: gradient shape mismatch at layer " +
                                        std::to_string(l));
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < params.size(); ++l) {
        double* p = params[l].data.data();
        const double* g = grads[l].data.data();
        double* m = state.m[l].data.data();
        double* v = state.v[l].data.data();
        const std::size_t n = params[l].data.size();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

std::string arch_name(Arch a) { return a == Arch::sgc ? "sgc" : "gcn"; }

Arch arch_from_name(const std::string& name) {
    if (name == "sgc") return Arch::sgc;
    if (name == "gcn") return Arch::gcn;
    throw ConfigError("unknown arch '" + name + "' (expected sgc or gcn)");
}

Model make_model(Arch arch, int depth, std::size_t in_dim, int hidden,
                 std::size_t out_dim, Rng& rng) {
    if (depth < 1) throw std::invalid_argument("model: depth must be positive");
    if (in_dim == 0 || out_dim == 0)
        throw std::invalid_argument("model: zero dimension");
    Model m;
    m.arch = arch;
    m.depth = depth;
    m.hidden = hidden;
    m.out_dim = static_cast<int>(out_dim);
    auto xavier = [&rng](std::size_t rows, std::size_t cols) {
        Matrix w(rows, cols);
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (double& v : w.data) v = (2.0 * rng.uniform() - 1.0) * bound;
        return w;
    };
    if (arch == Arch::sgc) {
        m.weights.push_back(xavier(in_dim, out_dim));
    } else {
        if (depth == 1) {
            m.weights.push_back(xavier(in_dim, out_dim));
        } else {
            if (hidden < 1) throw std::invalid_argument("model: hidden width must be positive");
            m.weights.push_back(xavier(in_dim, static_cast<std::size_t>(hidden)));
            for (int l = 1; l + 1 < depth; ++l)
                m.weights.push_back(xavier(static_cast<std::size_t>(hidden),
                                           static_cast<std::size_t>(hidden)));
            m.weights.push_back(xavier(static_cast<std::size_t>(hidden), out_dim));
        }
    }
    return m;
}

Matrix model_forward(const Model& model, const GraphPatch& patch,
                     const Matrix& features, ForwardCache* cache) {
    if (model.arch == Arch::sgc)
        return sgc_forward(patch, features, model.depth, model.weights[0], cache);
    return gcn_forward(patch, features, model.weights, cache);
}

namespace {

constexpr char kMagic[4] = {'R', 'P', 'R', 'M'};
constexpr unsigned char kVersion = 1;

void put_u32(std::FILE* fp, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    std::fwrite(b, 1, 4, fp);
}

std::uint32_t get_u32(std::FILE* fp, const std::string& path) {
    unsigned char b[4];
    if (std::fread(b, 1, 4, fp) != 4) throw DataError(path + ": truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::FILE* fp, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    std::fwrite(b, 1, 8, fp);
}

double get_f64(std::FILE* fp, const std::string& path) {
    unsigned char b[8];
    if (std::fread(b, 1, 8, fp) != 8) throw DataError(path + ": truncated checkpoint");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_params(std::FILE* fp, const std::vector<Matrix>& params) {
    std::fwrite(kMagic, 1, 4, fp);
    std::fputc(kVersion, fp);
    put_u32(fp, static_cast<std::uint32_t>(params.size()));
    for (const Matrix& p : params) {
        put_u32(fp, static_cast<std::uint32_t>(p.rows));
        put_u32(fp, static_cast<std::uint32_t>(p.cols));
        for (double v : p.data) put_f64(fp, v);
    }
}

std::vector<Matrix> read_params(std::FILE* fp, const std::string& path) {
    char magic[4];
    if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError(path + ": bad checkpoint magic");
    const int version = std::fgetc(fp);
    if (version != kVersion)
        throw DataError(path + ": unsupported checkpoint version");
    const std::uint32_t layers = get_u32(fp, path);
    std::vector<Matrix> params;
    params.reserve(layers);
    for (std::uint32_t l = 0; l < layers; ++l) {
        const std::uint32_t rows = get_u32(fp, path);
        const std::uint32_t cols = get_u32(fp, path);
        if (rows == 0 || cols == 0) throw DataError(path + ": empty layer");
        Matrix p(rows, cols);
        for (double& v : p.data) v = get_f64(fp, path);
        params.push_back(std::move(p));
    }
    return params;
}

} // namespace

void save_params(const std::string& path, const std::vector<Matrix>& params) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw DataError("cannot open " + path + " for writing");
    write_params(fp, params);
    std::fclose(fp);
}

std::vector<Matrix> load_params(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw DataError("cannot open " + path);
    try {
        auto params = read_params(fp, path);
        std::fclose(fp);
        return params;
    } catch (...) {
        std::fclose(fp);
        throw;
    }
}

void save_model(const std::string& path, const Model& model) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw DataError("cannot open " + path + " for writing");
    std::fprintf(fp, "%s %d %d %d\n", arch_name(model.arch).c_str(), model.depth,
                 model.hidden, model.out_dim);
    write_params(fp, model.weights);
    std::fclose(fp);
}

Model load_model(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw DataError("cannot open " + path);
    try {
        char arch[8] = {0};
        int depth = 0, hidden = 0, out_dim = 0;
        if (std::fscanf(fp, "%7s %d %d %d", arch, &depth, &hidden, &out_dim) != 4)
            throw DataError(path + ": bad model header");
        if (std::fgetc(fp) != '\n') throw DataError(path + ": bad model header");
        Model m;
        m.arch = arch_from_name(arch);
        m.depth = depth;
        m.hidden = hidden;
        m.out_dim = out_dim;
        m.weights = read_params(fp, path);
        const std::size_t expected =
            m.arch == Arch::sgc ? 1 : static_cast<std::size_t>(m.depth);
        if (m.weights.size() != expected)
            throw DataError(path + ": layer count does not match header");
        std::fclose(fp);
        return m;
    } catch (...) {
        std::fclose(fp);
        throw;
    }
}

} // namespace relprop
