#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace relprop {

// Flat "key = value" run configuration. Unknown keys are rejected with the
// offending line number; omitted keys keep the defaults below.
struct RunConfig {
    // dataset
    int classes = 10;
    int samples_per_class = 200;
    int feature_dim = 16;
    double spread = 0.20;
    int outlier_classes = 100;
    double noise_ratio = 0.5;
    double labeled_ratio = 0.01;
    // graph
    int knn_k = 30;
    int workers = 1;
    // predictor
    std::string arch = "sgc";
    int depth = 2;
    int hidden = 256;
    int predictor_epochs = 400;
    int train_patches = 32;
    bool resample_patches = false;
    double learning_rate = 0.05;
    // scheduler
    double conf_threshold = 0.9;
    double gain_threshold = 500.0;
    int max_patch_size = 3000;
    int exclusion_hops = 1;
    double epsilon = 0.01;
    double eta = 0.05;
    std::string confidence_source = "combined";
    double confnet_warmup = 0.5;
    int confnet_epochs = 100;
    int confnet_depth = 1;
    bool confnet_on_patches = true;
    int max_iterations = 600;
    int patience = 40;
    int parallel_patches = 1;
    // diffusion baseline
    int lp_max_sweeps = 1000;
    double lp_tolerance = 1e-6;
    // commands
    std::string method = "relprop";
    std::string methods = "lp,relprop";
    std::string noise_ratios = "0,0.1,0.3,0.5";
    int repeats = 5;
    // io
    std::uint64_t seed = 1;
    std::string out_dir = "out";
};

RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig parse_config_file(const std::string& path);

// Every key with its effective value, one per line, sorted by key. Written
// next to command outputs so a run can be reproduced from its artifacts.
std::string echo_config(const RunConfig& config);

std::vector<std::string> split_list(const std::string& csv);
std::vector<double> parse_ratio_list(const std::string& csv);

} // namespace relprop
