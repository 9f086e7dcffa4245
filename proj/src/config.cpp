#include "relprop/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "relprop/util.hpp"

namespace relprop {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, std::size_t line,
                       const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

long long to_int(const std::string& v, const std::string& origin, std::size_t line) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail(origin, line, "expected an integer, got '" + v + "'");
    }
}

double to_double(const std::string& v, const std::string& origin, std::size_t line) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail(origin, line, "expected a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& origin, std::size_t line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(origin, line, "expected true or false, got '" + v + "'");
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void validate(const RunConfig& c) {
    auto bad = [](const std::string& what) { throw ConfigError("config: " + what); };
    if (c.classes < 2) bad("classes must be at least 2");
    if (c.samples_per_class < 2) bad("samples_per_class must be at least 2");
    if (c.feature_dim < 2) bad("feature_dim must be at least 2");
    if (c.spread < 0.0) bad("spread must be non-negative");
    if (c.outlier_classes < 0) bad("outlier_classes must be non-negative");
    if (c.noise_ratio < 0.0 || c.noise_ratio >= 1.0) bad("noise_ratio must be in [0, 1)");
    if (c.labeled_ratio <= 0.0 || c.labeled_ratio >= 1.0)
        bad("labeled_ratio must be in (0, 1)");
    if (c.knn_k < 1) bad("knn_k must be positive");
    if (c.workers < 1) bad("workers must be positive");
    if (c.arch != "sgc" && c.arch != "gcn") bad("arch must be sgc or gcn");
    if (c.depth < 1) bad("depth must be positive");
    if (c.hidden < 1) bad("hidden must be positive");
    if (c.predictor_epochs < 0) bad("predictor_epochs must be non-negative");
    if (c.train_patches < 1) bad("train_patches must be positive");
    if (c.learning_rate <= 0.0) bad("learning_rate must be positive");
    if (c.conf_threshold <= 0.0 || c.conf_threshold > 1.0)
        bad("conf_threshold must be in (0, 1]");
    if (c.gain_threshold < 0.0) bad("gain_threshold must be non-negative");
    if (c.max_patch_size < 1) bad("max_patch_size must be positive");
    if (c.exclusion_hops < 0) bad("exclusion_hops must be non-negative");
    if (c.epsilon <= 0.0 || c.epsilon >= 1.0) bad("epsilon must be in (0, 1)");
    if (c.eta <= 0.0 || c.eta >= 0.5) bad("eta must be in (0, 0.5)");
    if (c.confidence_source != "random" && c.confidence_source != "multi_view" &&
        c.confidence_source != "combined")
        bad("confidence_source must be random, multi_view or combined");
    if (c.confnet_warmup < 0.0 || c.confnet_warmup > 1.0)
        bad("confnet_warmup must be in [0, 1]");
    if (c.confnet_epochs < 0) bad("confnet_epochs must be non-negative");
    if (c.confnet_depth < 1) bad("confnet_depth must be positive");
    if (c.max_iterations < 0) bad("max_iterations must be non-negative");
    if (c.patience < 1) bad("patience must be positive");
    if (c.parallel_patches < 1) bad("parallel_patches must be positive");
    if (c.lp_max_sweeps < 1) bad("lp_max_sweeps must be positive");
    if (c.lp_tolerance <= 0.0) bad("lp_tolerance must be positive");
    if (c.method != "lp" && c.method != "relprop") bad("method must be lp or relprop");
    if (c.repeats < 1) bad("repeats must be positive");
    for (const std::string& name : split_list(c.methods))
        if (name != "lp" && name != "relprop")
            bad("methods entries must be lp or relprop");
    for (double rho : parse_ratio_list(c.noise_ratios))
        if (rho < 0.0 || rho >= 1.0) bad("noise_ratios entries must be in [0, 1)");
    if (c.out_dir.empty()) bad("out_dir must not be empty");
}

} // namespace

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> items;
    std::string item;
    std::stringstream ss(csv);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

std::vector<double> parse_ratio_list(const std::string& csv) {
    std::vector<double> out;
    for (const std::string& item : split_list(csv)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad ratio '" + item + "' in list");
        }
    }
    if (out.empty()) throw ConfigError("empty ratio list");
    return out;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig c;
    std::map<std::string, std::function<void(const std::string&, std::size_t)>> setters;
    auto set_int = [&](int& field, int lo) {
        return [&field, lo, &origin](const std::string& v, std::size_t line) {
            const long long x = to_int(v, origin, line);
            if (x < lo || x > 1'000'000'000LL) fail(origin, line, "value out of range");
            field = static_cast<int>(x);
        };
    };
    auto set_double = [&](double& field) {
        return [&field, &origin](const std::string& v, std::size_t line) {
            field = to_double(v, origin, line);
        };
    };
    auto set_bool = [&](bool& field) {
        return [&field, &origin](const std::string& v, std::size_t line) {
            field = to_bool(v, origin, line);
        };
    };
    auto set_string = [&](std::string& field) {
        return [&field](const std::string& v, std::size_t) { field = v; };
    };

    setters["classes"] = set_int(c.classes, 0);
    setters["samples_per_class"] = set_int(c.samples_per_class, 0);
    setters["feature_dim"] = set_int(c.feature_dim, 0);
    setters["spread"] = set_double(c.spread);
    setters["outlier_classes"] = set_int(c.outlier_classes, 0);
    setters["noise_ratio"] = set_double(c.noise_ratio);
    setters["labeled_ratio"] = set_double(c.labeled_ratio);
    setters["knn_k"] = set_int(c.knn_k, 0);
    setters["workers"] = set_int(c.workers, 0);
    setters["arch"] = set_string(c.arch);
    setters["depth"] = set_int(c.depth, 0);
    setters["hidden"] = set_int(c.hidden, 0);
    setters["predictor_epochs"] = set_int(c.predictor_epochs, 0);
    setters["train_patches"] = set_int(c.train_patches, 0);
    setters["resample_patches"] = set_bool(c.resample_patches);
    setters["learning_rate"] = set_double(c.learning_rate);
    setters["conf_threshold"] = set_double(c.conf_threshold);
    setters["gain_threshold"] = set_double(c.gain_threshold);
    setters["max_patch_size"] = set_int(c.max_patch_size, 0);
    setters["exclusion_hops"] = set_int(c.exclusion_hops, 0);
    setters["epsilon"] = set_double(c.epsilon);
    setters["eta"] = set_double(c.eta);
    setters["confidence_source"] = set_string(c.confidence_source);
    setters["confnet_warmup"] = set_double(c.confnet_warmup);
    setters["confnet_epochs"] = set_int(c.confnet_epochs, 0);
    setters["confnet_depth"] = set_int(c.confnet_depth, 0);
    setters["confnet_on_patches"] = set_bool(c.confnet_on_patches);
    setters["max_iterations"] = set_int(c.max_iterations, 0);
    setters["patience"] = set_int(c.patience, 0);
    setters["parallel_patches"] = set_int(c.parallel_patches, 0);
    setters["lp_max_sweeps"] = set_int(c.lp_max_sweeps, 0);
    setters["lp_tolerance"] = set_double(c.lp_tolerance);
    setters["method"] = set_string(c.method);
    setters["methods"] = set_string(c.methods);
    setters["noise_ratios"] = set_string(c.noise_ratios);
    setters["repeats"] = set_int(c.repeats, 0);
    setters["seed"] = [&c, &origin](const std::string& v, std::size_t line) {
        try {
            // stoull wraps negatives around instead of failing
            if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
            std::size_t used = 0;
            c.seed = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            fail(origin, line, "expected a non-negative integer seed, got '" + v + "'");
        }
    };
    setters["out_dir"] = set_string(c.out_dir);

    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(origin, lineno, "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(origin, lineno, "missing key");
        if (value.empty()) fail(origin, lineno, "missing value for '" + key + "'");
        auto it = setters.find(key);
        if (it == setters.end()) fail(origin, lineno, "unknown key '" + key + "'");
        it->second(value, lineno);
    }
    validate(c);
    return c;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

std::string echo_config(const RunConfig& c) {
    std::map<std::string, std::string> kv;
    kv["classes"] = std::to_string(c.classes);
    kv["samples_per_class"] = std::to_string(c.samples_per_class);
    kv["feature_dim"] = std::to_string(c.feature_dim);
    kv["spread"] = fmt_double(c.spread);
    kv["outlier_classes"] = std::to_string(c.outlier_classes);
    kv["noise_ratio"] = fmt_double(c.noise_ratio);
    kv["labeled_ratio"] = fmt_double(c.labeled_ratio);
    kv["knn_k"] = std::to_string(c.knn_k);
    kv["workers"] = std::to_string(c.workers);
    kv["arch"] = c.arch;
    kv["depth"] = std::to_string(c.depth);
    kv["hidden"] = std::to_string(c.hidden);
    kv["predictor_epochs"] = std::to_string(c.predictor_epochs);
    kv["train_patches"] = std::to_string(c.train_patches);
    kv["resample_patches"] = c.resample_patches ? "true" : "false";
    kv["learning_rate"] = fmt_double(c.learning_rate);
    kv["conf_threshold"] = fmt_double(c.conf_threshold);
    kv["gain_threshold"] = fmt_double(c.gain_threshold);
    kv["max_patch_size"] = std::to_string(c.max_patch_size);
    kv["exclusion_hops"] = std::to_string(c.exclusion_hops);
    kv["epsilon"] = fmt_double(c.epsilon);
    kv["eta"] = fmt_double(c.eta);
    kv["confidence_source"] = c.confidence_source;
    kv["confnet_warmup"] = fmt_double(c.confnet_warmup);
    kv["confnet_epochs"] = std::to_string(c.confnet_epochs);
    kv["confnet_depth"] = std::to_string(c.confnet_depth);
    kv["confnet_on_patches"] = c.confnet_on_patches ? "true" : "false";
    kv["max_iterations"] = std::to_string(c.max_iterations);
    kv["patience"] = std::to_string(c.patience);
    kv["parallel_patches"] = std::to_string(c.parallel_patches);
    kv["lp_max_sweeps"] = std::to_string(c.lp_max_sweeps);
    kv["lp_tolerance"] = fmt_double(c.lp_tolerance);
    kv["method"] = c.method;
    kv["methods"] = c.methods;
    kv["noise_ratios"] = c.noise_ratios;
    kv["repeats"] = std::to_string(c.repeats);
    kv["seed"] = std::to_string(c.seed);
    kv["out_dir"] = c.out_dir;

    std::string out;
    for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
    return out;
}

} // namespace relprop
