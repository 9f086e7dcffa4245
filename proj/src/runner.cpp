#include "relprop/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

#include "relprop/lp.hpp"
#include "relprop/predictor.hpp"
#include "relprop/util.hpp"

namespace relprop {

namespace {

namespace fs = std::filesystem;

SynthSpec synth_spec(const RunConfig& c, double noise_ratio, std::uint64_t seed) {
    SynthSpec s;
    s.num_classes = c.classes;
    s.samples_per_class = c.samples_per_class;
    s.feature_dim = c.feature_dim;
    s.spread = c.spread;
    s.outlier_classes = c.outlier_classes;
    s.noise_ratio = noise_ratio;
    s.labeled_ratio = c.labeled_ratio;
    s.seed = seed;
    return s;
}

std::vector<int> seed_labels_of(const Dataset& ds) {
    std::vector<int> seeds(ds.size(), -1);
    for (std::size_t v = 0; v < ds.size(); ++v)
        if (ds.split[v] == 'L') {
            if (ds.truth[v] < 0)
                throw DataError("dataset: labeled vertex " + std::to_string(v) +
                                " has no class");
            seeds[v] = ds.truth[v];
        }
    return seeds;
}

// threshold calibrated on the validation pool; degenerate pools fall back to
// never flagging (no outlier examples) or always flagging (no in-class ones)
double validation_threshold(std::span<const double> confidence, const Dataset& ds) {
    std::vector<double> conf;
    std::vector<int> truth;
    for (std::size_t v = 0; v < ds.size(); ++v)
        if (ds.split[v] == 'V') {
            conf.push_back(confidence[v]);
            truth.push_back(ds.truth[v]);
        }
    bool has_out = false, has_in = false;
    for (int y : truth) (y < 0 ? has_out : has_in) = true;
    if (conf.empty() || !has_out) return 0.0;
    if (!has_in) return std::nextafter(1.0, 2.0);
    return determine_outlier_threshold(conf, truth);
}

MethodOutput run_lp_method(const Dataset& ds, const AffinityGraph& graph,
                           const RunConfig& config) {
    LPConfig lc;
    lc.max_sweeps = static_cast<std::size_t>(config.lp_max_sweeps);
    lc.tolerance = config.lp_tolerance;
    const auto seeds = seed_labels_of(ds);
    LPResult lp = run_lp(graph, seeds, ds.num_classes, lc);

    MethodOutput out;
    out.threshold = validation_threshold(lp.confidence, ds);
    out.decision.threshold = out.threshold;
    out.decision.labels.resize(ds.size());
    out.decision.confidence = lp.confidence;
    for (std::size_t v = 0; v < ds.size(); ++v) {
        if (seeds[v] >= 0) {
            out.decision.labels[v] = seeds[v];
            continue;
        }
        if (lp.confidence[v] < out.threshold) {
            out.decision.labels[v] = -1;
            continue;
        }
        std::size_t best = 0;
        for (std::size_t k = 1; k < lp.probs.cols; ++k)
            if (lp.probs.at(v, k) > lp.probs.at(v, best)) best = k;
        out.decision.labels[v] = static_cast<int>(best);
    }
    return out;
}

MethodOutput run_relprop_method(const Dataset& ds, const AffinityGraph& graph,
                                const RunConfig& config, std::uint64_t seed) {
    Rng master(seed);
    const auto seeds = seed_labels_of(ds);
    Model model = make_model(arch_from_name(config.arch), config.depth,
                             ds.features.cols, config.hidden,
                             static_cast<std::size_t>(ds.num_classes), master);

    SchedulerOptions opts = scheduler_options(config, 0);
    const ExtractorConfig excfg = scaled_extractor(opts, graph.num_vertices());
    const auto states0 = init_states(seeds, ds.num_classes);

    PredictorTrainOptions topts;
    topts.epochs = config.predictor_epochs;
    topts.lr = config.learning_rate;
    if (config.resample_patches) {
        train_predictor_resampled(model, graph, ds.features, states0,
                                  static_cast<std::size_t>(config.train_patches),
                                  excfg, topts, master);
    } else {
        const auto patches = sample_training_patches(
            graph, states0, static_cast<std::size_t>(config.train_patches), excfg,
            master);
        train_predictor(model, patches, ds.features, states0, topts);
    }

    opts.seed = master.fork();
    PropagationResult prop =
        propagate(graph, ds.features, seeds, ds.num_classes, model, opts);

    std::vector<double> conf(ds.size());
    for (std::size_t v = 0; v < ds.size(); ++v) conf[v] = prop.states[v].confidence;

    MethodOutput out;
    out.threshold = validation_threshold(conf, ds);
    out.decision = finalize_labels(prop.states, out.threshold);
    out.visits.resize(ds.size());
    for (std::size_t v = 0; v < ds.size(); ++v) out.visits[v] = prop.states[v].visits;
    out.patch_count = std::move(prop.patch_count);
    out.multi_view_conf = std::move(prop.multi_view_conf);
    out.iteration_log = std::move(prop.log);
    out.from_propagation = true;
    return out;
}

MethodOutput run_method_on_graph(const std::string& method, const Dataset& ds,
                                 const AffinityGraph& graph, const RunConfig& config,
                                 std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    MethodOutput out;
    if (method == "lp") {
        out = run_lp_method(ds, graph, config);
    } else if (method == "relprop") {
        out = run_relprop_method(ds, graph, config, seed);
    } else {
        throw ConfigError("unknown method '" + method + "'");
    }
    out.metrics = evaluate_labels(out.decision.labels, out.decision.confidence, ds);
    out.metrics.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::string ratio_name(double rho) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rho%g", rho);
    return buf;
}

std::string metrics_row(const std::string& spec, const std::string& method,
                        const std::string& seed_field, const MetricsReport& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.3f",
                  spec.c_str(), method.c_str(), seed_field.c_str(), m.acc,
                  m.acc_inclass, m.outlier_precision, m.outlier_recall, m.conf_gap,
                  m.runtime_s);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw DataError("cannot open " + path + " for writing");
    std::fwrite(text.data(), 1, text.size(), fp);
    std::fclose(fp);
}

void write_echo(const RunConfig& config) {
    write_text((fs::path(config.out_dir) / "effective_config.txt").string(),
               echo_config(config));
}

Dataset load_bundle(const RunConfig& config) {
    const fs::path dir(config.out_dir);
    Dataset ds;
    ds.features = load_features((dir / "features.txt").string());
    ds.truth = load_truth((dir / "truth.txt").string());
    ds.split = load_splits((dir / "splits.txt").string());
    ds.num_classes = config.classes;
    if (ds.truth.size() != ds.features.rows || ds.split.size() != ds.features.rows)
        throw DataError("bundle files disagree on vertex count");
    for (std::size_t v = 0; v < ds.truth.size(); ++v)
        if (ds.truth[v] >= config.classes)
            throw DataError("bundle label exceeds configured class count at vertex " +
                            std::to_string(v));
    return ds;
}

void write_method_outputs(const RunConfig& config, const std::string& method,
                          const MethodOutput& out) {
    const fs::path dir(config.out_dir);
    std::vector<LabelRow> labels(out.decision.labels.size());
    for (std::size_t v = 0; v < labels.size(); ++v)
        labels[v] = {static_cast<std::uint32_t>(v), out.decision.labels[v],
                     out.decision.confidence[v]};
    save_labels((dir / ("labels_" + method + ".txt")).string(), labels);

    std::vector<ConfidenceRow> conf(out.decision.labels.size());
    for (std::size_t v = 0; v < conf.size(); ++v)
        conf[v] = {static_cast<std::uint32_t>(v),
                   out.from_propagation ? out.visits[v] : 0,
                   out.decision.confidence[v],
                   out.decision.labels[v] == -1 ? 1 : 0};
    save_confidence_dump((dir / ("confidence_" + method + ".txt")).string(), conf);

    if (out.from_propagation)
        save_iteration_log((dir / ("iterations_" + method + ".txt")).string(),
                           out.iteration_log);

    std::string csv =
        "spec,method,seed,acc,acc_inclass,outlier_prec,outlier_rec,conf_gap,runtime_s\n";
    csv += metrics_row("bundle", method, std::to_string(config.seed), out.metrics);
    csv += "\n";
    write_text((dir / ("metrics_" + method + ".csv")).string(), csv);
}

} // namespace

SchedulerOptions scheduler_options(const RunConfig& config, std::uint64_t seed) {
    SchedulerOptions o;
    o.conf_threshold = config.conf_threshold;
    o.gain_threshold = config.gain_threshold;
    o.max_patch_size = static_cast<std::size_t>(config.max_patch_size);
    o.exclusion_hops = config.exclusion_hops;
    o.epsilon = config.epsilon;
    o.eta = config.eta;
    o.source = confidence_source_from_name(config.confidence_source);
    o.confnet_warmup = config.confnet_warmup;
    o.confnet_epochs = config.confnet_epochs;
    o.confnet_depth = config.confnet_depth;
    o.confnet_lr = config.learning_rate;
    o.confnet_on_patches = config.confnet_on_patches;
    o.max_iterations = static_cast<std::size_t>(config.max_iterations);
    o.patience = static_cast<std::size_t>(config.patience);
    o.parallel_patches = static_cast<std::size_t>(config.parallel_patches);
    o.workers = static_cast<unsigned>(config.workers);
    o.seed = seed;
    return o;
}

MethodOutput run_method(const std::string& method, const Dataset& dataset,
                        const RunConfig& config, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const AffinityGraph graph =
        build_knn_graph(dataset.features, static_cast<std::size_t>(config.knn_k),
                        static_cast<unsigned>(config.workers));
    MethodOutput out = run_method_on_graph(method, dataset, graph, config, seed);
    out.metrics.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<SuiteCell> run_suite(const RunConfig& base) {
    const auto ratios = parse_ratio_list(base.noise_ratios);
    const auto methods = split_list(base.methods);
    if (methods.empty()) throw ConfigError("bench: empty method list");

    std::vector<SuiteCell> cells;
    for (double rho : ratios) {
        // datasets and graphs are shared by every method at this ratio
        std::vector<Dataset> datasets;
        std::vector<AffinityGraph> graphs;
        std::vector<std::string> gen_errors(static_cast<std::size_t>(base.repeats));
        for (int r = 0; r < base.repeats; ++r) {
            const std::uint64_t seed = base.seed + static_cast<std::uint64_t>(r);
            try {
                Dataset ds = generate_dataset(synth_spec(base, rho, seed));
                AffinityGraph g =
                    build_knn_graph(ds.features, static_cast<std::size_t>(base.knn_k),
                                    static_cast<unsigned>(base.workers));
                datasets.push_back(std::move(ds));
                graphs.push_back(std::move(g));
            } catch (const std::exception& e) {
                datasets.emplace_back();
                graphs.emplace_back();
                gen_errors[static_cast<std::size_t>(r)] = e.what();
            }
        }
        for (const std::string& method : methods) {
            for (int r = 0; r < base.repeats; ++r) {
                SuiteCell cell;
                cell.spec = ratio_name(rho);
                cell.method = method;
                cell.seed = base.seed + static_cast<std::uint64_t>(r);
                const auto idx = static_cast<std::size_t>(r);
                if (!gen_errors[idx].empty()) {
                    cell.error = gen_errors[idx];
                } else {
                    try {
                        cell.metrics = run_method_on_graph(method, datasets[idx],
                                                           graphs[idx], base, cell.seed)
                                           .metrics;
                        cell.ok = true;
                    } catch (const std::exception& e) {
                        cell.error = e.what();
                    }
                }
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

std::string results_csv_text(const std::vector<SuiteCell>& cells) {
    std::string csv =
        "spec,method,seed,acc,acc_inclass,outlier_prec,outlier_rec,conf_gap,runtime_s\n";
    for (const SuiteCell& cell : cells) {
        if (cell.ok) {
            csv += metrics_row(cell.spec, cell.method, std::to_string(cell.seed),
                               cell.metrics);
        } else {
            csv += cell.spec + "," + cell.method + "," + std::to_string(cell.seed) +
                   ",,,,,,";
        }
        csv += "\n";
    }

    // aggregate rows per (spec, method), in first-appearance order
    std::vector<std::pair<std::string, std::string>> groups;
    for (const SuiteCell& cell : cells) {
        const auto key = std::make_pair(cell.spec, cell.method);
        if (std::find(groups.begin(), groups.end(), key) == groups.end())
            groups.push_back(key);
    }
    for (const auto& [spec, method] : groups) {
        std::vector<const MetricsReport*> ok;
        for (const SuiteCell& cell : cells)
            if (cell.ok && cell.spec == spec && cell.method == method)
                ok.push_back(&cell.metrics);
        if (ok.empty()) continue;
        auto agg = [&](auto getter) {
            double mean = 0.0;
            for (const MetricsReport* m : ok) mean += getter(*m);
            mean /= static_cast<double>(ok.size());
            double var = 0.0;
            for (const MetricsReport* m : ok) {
                const double d = getter(*m) - mean;
                var += d * d;
            }
            const double std_dev =
                ok.size() > 1 ? std::sqrt(var / static_cast<double>(ok.size() - 1)) : 0.0;
            return std::make_pair(mean, std_dev);
        };
        MetricsReport mean, stdev;
        std::tie(mean.acc, stdev.acc) = agg([](const MetricsReport& m) { return m.acc; });
        std::tie(mean.acc_inclass, stdev.acc_inclass) =
            agg([](const MetricsReport& m) { return m.acc_inclass; });
        std::tie(mean.outlier_precision, stdev.outlier_precision) =
            agg([](const MetricsReport& m) { return m.outlier_precision; });
        std::tie(mean.outlier_recall, stdev.outlier_recall) =
            agg([](const MetricsReport& m) { return m.outlier_recall; });
        std::tie(mean.conf_gap, stdev.conf_gap) =
            agg([](const MetricsReport& m) { return m.conf_gap; });
        std::tie(mean.runtime_s, stdev.runtime_s) =
            agg([](const MetricsReport& m) { return m.runtime_s; });
        csv += metrics_row(spec, method, "mean", mean) + "\n";
        csv += metrics_row(spec, method, "std", stdev) + "\n";
    }
    return csv;
}

void write_results_csv(const std::string& path, const std::vector<SuiteCell>& cells) {
    write_text(path, results_csv_text(cells));
}

void cmd_generate(const RunConfig& config) {
    fs::create_directories(config.out_dir);
    const Dataset ds =
        generate_dataset(synth_spec(config, config.noise_ratio, config.seed));
    const fs::path dir(config.out_dir);
    save_features((dir / "features.txt").string(), ds.features);
    save_truth((dir / "truth.txt").string(), ds.truth);
    save_splits((dir / "splits.txt").string(), ds.split);
    write_echo(config);
}

void cmd_run(const RunConfig& config) {
    fs::create_directories(config.out_dir);
    const Dataset ds = load_bundle(config);
    const MethodOutput out = run_method(config.method, ds, config, config.seed);
    write_method_outputs(config, config.method, out);
    write_echo(config);
}

void cmd_bench(const RunConfig& config) {
    fs::create_directories(config.out_dir);
    const auto cells = run_suite(config);
    write_results_csv((fs::path(config.out_dir) / "results.csv").string(), cells);
    write_echo(config);
    bool any_ok = false;
    for (const SuiteCell& cell : cells)
        if (cell.ok) any_ok = true;
    if (!any_ok) throw DataError("bench: every cell failed");
}

} // namespace relprop
