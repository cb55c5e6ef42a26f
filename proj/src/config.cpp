#include "digsp/config.hpp"

#include <charconv>
#include <fstream>

#include "digsp/data.hpp"
#include "digsp/errors.hpp"

namespace digsp {

Mode parse_mode(const std::string& name) {
    if (name == "digsp") return Mode::Digsp;
    if (name == "bgp") return Mode::Bgp;
    if (name == "both") return Mode::Both;
    throw ConfigError("unknown mode '" + name + "' (expected digsp, bgp, or both)");
}

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::Digsp: return "digsp";
        case Mode::Bgp: return "bgp";
        case Mode::Both: return "both";
    }
    return "both";
}

namespace {

double parse_real(const std::string& key, const std::string& value) {
    double v = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
        throw ConfigError("key '" + key + "': cannot parse real value '" + value + "'");
    }
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    long long v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
        throw ConfigError("key '" + key + "': cannot parse integer value '" + value + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
        throw ConfigError("key '" + key + "': cannot parse seed value '" + value + "'");
    }
    return v;
}

std::string trimmed(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

}  // namespace

void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
    if (key == "mode") {
        cfg.mode = parse_mode(value);
    } else if (key == "dataset") {
        cfg.dataset_path = value;
    } else if (key == "scheme") {
        cfg.scheme = value;
    } else if (key == "n_runs") {
        cfg.n_runs = static_cast<int>(parse_int(key, value));
    } else if (key == "top_m") {
        cfg.top_m = static_cast<int>(parse_int(key, value));
    } else if (key == "alpha") {
        cfg.alpha = parse_real(key, value);
    } else if (key == "output_dir") {
        cfg.output_dir = value;
    } else if (key == "master_seed") {
        cfg.master_seed = parse_u64(key, value);
    } else if (key == "jobs") {
        cfg.jobs = static_cast<int>(parse_int(key, value));
    } else if (key == "population_size") {
        cfg.evolution.population_size = static_cast<int>(parse_int(key, value));
    } else if (key == "max_generations") {
        cfg.evolution.max_generations = static_cast<int>(parse_int(key, value));
    } else if (key == "stall_generations") {
        cfg.evolution.stall_generations = static_cast<int>(parse_int(key, value));
    } else if (key == "ahsam_trigger") {
        cfg.evolution.ahsam_trigger = static_cast<int>(parse_int(key, value));
    } else if (key == "genes_per_individual") {
        cfg.evolution.genes_per_individual = static_cast<int>(parse_int(key, value));
    } else if (key == "max_tree_depth") {
        cfg.evolution.max_tree_depth = static_cast<int>(parse_int(key, value));
    } else if (key == "p_crossover") {
        cfg.evolution.p_crossover = parse_real(key, value);
    } else if (key == "p_mutation") {
        cfg.evolution.p_mutation = parse_real(key, value);
    } else if (key == "p_reproduction") {
        cfg.evolution.p_reproduction = parse_real(key, value);
    } else if (key == "constant_lo") {
        cfg.evolution.constant_lo = parse_real(key, value);
    } else if (key == "constant_hi") {
        cfg.evolution.constant_hi = parse_real(key, value);
    } else if (key == "k_folds") {
        cfg.evolution.k_folds = static_cast<int>(parse_int(key, value));
    } else if (key == "lambda1") {
        cfg.evolution.lambda1 = parse_real(key, value);
    } else if (key == "lambda2") {
        cfg.evolution.lambda2 = parse_real(key, value);
    } else if (key == "synth_n") {
        cfg.synth_n = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "synth_noise_sd") {
        cfg.synth_noise_sd = parse_real(key, value);
    } else if (key == "elasticity_epsilon") {
        cfg.elasticity_epsilon = parse_real(key, value);
    } else if (key == "bootstrap_resamples") {
        cfg.bootstrap_resamples = static_cast<int>(parse_int(key, value));
    } else if (key == "bootstrap_level") {
        cfg.bootstrap_level = parse_real(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");

    ExperimentConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trimmed(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              " is not a key=value pair: '" + t + "'");
        }
        apply_config_entry(cfg, trimmed(t.substr(0, eq)), trimmed(t.substr(eq + 1)));
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    evolution.validate();
    partition_scheme(scheme);  // throws on unknown names
    if (n_runs < 1) throw ConfigError("n_runs must be >= 1");
    if (top_m < 1) throw ConfigError("top_m must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (synth_n < 10) throw ConfigError("synth_n must be >= 10");
    if (synth_noise_sd < 0.0) throw ConfigError("synth_noise_sd must be >= 0");
    if (!(elasticity_epsilon > 0.0)) throw ConfigError("elasticity_epsilon must be > 0");
    if (bootstrap_resamples < 1) throw ConfigError("bootstrap_resamples must be >= 1");
    if (!(bootstrap_level > 0.0 && bootstrap_level < 1.0)) {
        throw ConfigError("bootstrap_level must be in (0, 1)");
    }
}

}  // namespace digsp
