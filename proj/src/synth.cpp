#include "relprop/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "relprop/rng.hpp"
#include "relprop/util.hpp"

namespace relprop {

namespace {

void unit_normal_vector(Rng& rng, double* out, std::size_t d) {
    double norm = 0.0;
    do {
        norm = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            out[c] = rng.normal();
            norm += out[c] * out[c];
        }
        norm = std::sqrt(norm);
    } while (norm < 1e-9);
    for (std::size_t c = 0; c < d; ++c) out[c] /= norm;
}

void cluster_point(Rng& rng, const double* center, double spread, double* out,
                   std::size_t d) {
    double norm = 0.0;
    do {
        norm = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            out[c] = center[c] + spread * rng.normal();
            norm += out[c] * out[c];
        }
        norm = std::sqrt(norm);
    } while (norm < 1e-9);
    for (std::size_t c = 0; c < d; ++c) out[c] /= norm;
}

// first `take` elements of a partial Fisher-Yates shuffle over `pool`
std::vector<std::uint32_t> sample_without_replacement(std::vector<std::uint32_t> pool,
                                                      std::size_t take, Rng& rng) {
    if (take > pool.size())
        throw DataError("dataset: sample larger than pool");
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace

Dataset generate_dataset(const SynthSpec& spec) {
    if (spec.num_classes < 2) throw DataError("dataset: need at least two classes");
    if (spec.samples_per_class < 2)
        throw DataError("dataset: need at least two samples per class");
    if (spec.feature_dim < 2) throw DataError("dataset: need at least two dimensions");
    if (spec.spread < 0.0) throw DataError("dataset: negative spread");
    if (spec.noise_ratio < 0.0 || spec.noise_ratio >= 1.0)
        throw DataError("dataset: noise ratio must be in [0, 1)");
    if (spec.labeled_ratio <= 0.0 || spec.labeled_ratio >= 1.0)
        throw DataError("dataset: labeled ratio must be in (0, 1)");
    if (spec.noise_ratio > 0.0 && spec.outlier_classes < 1)
        throw DataError("dataset: outliers requested but no outlier clusters");

    const std::size_t m = static_cast<std::size_t>(spec.num_classes);
    const std::size_t spc = static_cast<std::size_t>(spec.samples_per_class);
    const std::size_t d = static_cast<std::size_t>(spec.feature_dim);
    const std::size_t labeled_per_class = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(spec.labeled_ratio *
                                                 static_cast<double>(spc))));
    if (labeled_per_class >= spc)
        throw DataError("dataset: labeled ratio leaves no unlabeled vertices");

    const std::size_t in_class = m * spc;
    const std::size_t labeled = m * labeled_per_class;
    const std::size_t unlabeled_in = in_class - labeled;
    const std::size_t outliers = static_cast<std::size_t>(std::llround(
        spec.noise_ratio / (1.0 - spec.noise_ratio) * static_cast<double>(unlabeled_in)));
    const std::size_t n = in_class + outliers;

    Rng rng(spec.seed);
    const std::size_t num_centers =
        m + static_cast<std::size_t>(std::max(spec.outlier_classes, 0));
    Matrix centers(num_centers, d);
    for (std::size_t c = 0; c < num_centers; ++c)
        unit_normal_vector(rng, centers.data.data() + c * d, d);

    Dataset ds;
    ds.num_classes = spec.num_classes;
    ds.features = Matrix(n, d);
    ds.truth.assign(n, -1);
    ds.split.assign(n, 'U');

    std::size_t row = 0;
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t s = 0; s < spc; ++s, ++row) {
            cluster_point(rng, centers.data.data() + c * d, spec.spread,
                          ds.features.data.data() + row * d, d);
            ds.truth[row] = static_cast<int>(c);
        }

    // stratified labeled pool, per-class draw
    for (std::size_t c = 0; c < m; ++c) {
        std::vector<std::uint32_t> pool(spc);
        std::iota(pool.begin(), pool.end(), static_cast<std::uint32_t>(c * spc));
        for (std::uint32_t v : sample_without_replacement(pool, labeled_per_class, rng))
            ds.split[v] = 'L';
    }

    for (std::size_t o = 0; o < outliers; ++o, ++row) {
        const std::size_t cluster = m + rng.below(static_cast<std::uint64_t>(
                                            std::max(spec.outlier_classes, 1)));
        cluster_point(rng, centers.data.data() + cluster * d, spec.spread,
                      ds.features.data.data() + row * d, d);
    }

    // validation pool: at least the labeled pool, floored at 5% of the
    // unlabeled in-class vertices so the outlier threshold fit stays stable
    // on small corpora; outlier share matches the noise ratio as closely as
    // the census allows
    const std::size_t val_total = std::max(labeled, (unlabeled_in + 19) / 20);
    std::size_t val_out = static_cast<std::size_t>(
        std::llround(spec.noise_ratio * static_cast<double>(val_total)));
    val_out = std::min(val_out, outliers);
    const std::size_t val_in = val_total - val_out;
    if (val_in > unlabeled_in)
        throw DataError("dataset: validation pool does not fit among unlabeled vertices");

    std::vector<std::uint32_t> in_pool;
    for (std::uint32_t v = 0; v < in_class; ++v)
        if (ds.split[v] == 'U') in_pool.push_back(v);
    for (std::uint32_t v : sample_without_replacement(std::move(in_pool), val_in, rng))
        ds.split[v] = 'V';

    if (val_out > 0) {
        std::vector<std::uint32_t> out_pool(outliers);
        std::iota(out_pool.begin(), out_pool.end(), static_cast<std::uint32_t>(in_class));
        for (std::uint32_t v : sample_without_replacement(std::move(out_pool), val_out, rng))
            ds.split[v] = 'V';
    }
    return ds;
}

MetricsReport evaluate_labels(std::span<const int> predicted,
                              std::span<const double> confidence,
                              const Dataset& dataset) {
    const std::size_t n = dataset.size();
    if (predicted.size() != n || confidence.size() != n)
        throw std::invalid_argument("evaluate: prediction arrays do not match dataset");

    MetricsReport r;
    std::size_t eval_total = 0, correct = 0;
    std::size_t in_total = 0, in_correct = 0;
    std::size_t true_out = 0, pred_out = 0, hit_out = 0;
    double conf_in = 0.0, conf_out = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        if (dataset.split[v] == 'L') continue;
        ++eval_total;
        const bool is_out = dataset.truth[v] < 0;
        if (predicted[v] == dataset.truth[v]) ++correct;
        if (is_out) {
            ++true_out;
            conf_out += confidence[v];
            if (predicted[v] == -1) ++hit_out;
        } else {
            ++in_total;
            conf_in += confidence[v];
            if (predicted[v] == dataset.truth[v]) ++in_correct;
        }
        if (predicted[v] == -1) ++pred_out;
    }
    if (eval_total == 0) throw std::invalid_argument("evaluate: nothing to score");

    r.acc = static_cast<double>(correct) / static_cast<double>(eval_total);
    r.acc_inclass = in_total == 0
                        ? 1.0
                        : static_cast<double>(in_correct) / static_cast<double>(in_total);
    r.outlier_precision =
        pred_out == 0 ? 1.0 : static_cast<double>(hit_out) / static_cast<double>(pred_out);
    r.outlier_recall =
        true_out == 0 ? 1.0 : static_cast<double>(hit_out) / static_cast<double>(true_out);
    if (in_total > 0 && true_out > 0)
        r.conf_gap = conf_in / static_cast<double>(in_total) -
                     conf_out / static_cast<double>(true_out);
    return r;
}

} // namespace relprop
