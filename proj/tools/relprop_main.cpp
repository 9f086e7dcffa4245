#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "relprop/config.hpp"
#include "relprop/runner.hpp"
#include "relprop/util.hpp"

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("config", c.config_path, "run configuration file")->required();
    cmd->add_option("--seed", c.seed, "override the configured seed");
    cmd->add_option("--out", c.out_dir, "override the configured output directory");
}

relprop::RunConfig load(const Common& c) {
    relprop::RunConfig cfg = relprop::parse_config_file(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    if (c.out_dir) cfg.out_dir = *c.out_dir;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reliable label propagation on noisy affinity graphs"};
    app.require_subcommand(1);

    Common gen_args, run_args, bench_args;
    CLI::App* gen = app.add_subcommand("generate", "write a synthetic dataset bundle");
    add_common(gen, gen_args);
    CLI::App* run = app.add_subcommand("run", "label a dataset bundle with one method");
    add_common(run, run_args);
    CLI::App* bench = app.add_subcommand("bench", "noise-ratio sweep over all methods");
    add_common(bench, bench_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            relprop::cmd_generate(load(gen_args));
        } else if (run->parsed()) {
            relprop::cmd_run(load(run_args));
        } else if (bench->parsed()) {
            relprop::cmd_bench(load(bench_args));
        }
        return 0;
    } catch (const relprop::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const relprop::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const relprop::NumericError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
