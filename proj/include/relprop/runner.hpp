#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relprop/config.hpp"
#include "relprop/io.hpp"
#include "relprop/scheduler.hpp"
#include "relprop/synth.hpp"

namespace relprop {

// Everything a method run produces for one dataset.
struct MethodOutput {
    OutlierDecision decision;
    MetricsReport metrics;
    double threshold = 0.0;
    // propagation extras, empty for the diffusion baseline
    std::vector<std::uint32_t> visits;
    std::vector<std::uint32_t> patch_count;
    std::vector<double> multi_view_conf;
    std::vector<IterationRecord> iteration_log;
    bool from_propagation = false;
};

SchedulerOptions scheduler_options(const RunConfig& config, std::uint64_t seed);

// Runs "lp" or "relprop" end to end on an in-memory dataset: graph build,
// method, validation-calibrated outlier threshold, final labels, metrics.
MethodOutput run_method(const std::string& method, const Dataset& dataset,
                        const RunConfig& config, std::uint64_t seed);

struct SuiteCell {
    std::string spec;   // e.g. rho0.3
    std::string method;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;  // failure note for missing cells
    MetricsReport metrics;
};

// Full grid over the configured noise ratios, methods and repeats. A failing
// cell is recorded and skipped, never fatal.
std::vector<SuiteCell> run_suite(const RunConfig& base);

// results table: pinned header, one row per cell, then mean and std rows per
// (spec, method) pair over the successful repeats.
void write_results_csv(const std::string& path, const std::vector<SuiteCell>& cells);
std::string results_csv_text(const std::vector<SuiteCell>& cells);

// command entry points used by the binary; each writes its artifacts plus an
// effective-config echo into the output directory
void cmd_generate(const RunConfig& config);
void cmd_run(const RunConfig& config);
void cmd_bench(const RunConfig& config);

} // namespace relprop
