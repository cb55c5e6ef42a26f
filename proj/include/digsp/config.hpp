#pragma once

#include <cstdint>
#include <string>

#include "digsp/analysis.hpp"
#include "digsp/evolution.hpp"

namespace digsp {

enum class Mode { Digsp, Bgp, Both };

Mode parse_mode(const std::string& name);          // throws ConfigError
std::string mode_name(Mode mode);

/// Everything one experiment needs. Defaults reproduce the reference
/// configuration; every field maps to one config-file key and one CLI flag.
struct ExperimentConfig {
    Mode mode = Mode::Both;
    std::string dataset_path;   // empty: use the synthetic benchmark
    std::string scheme = "full";
    int n_runs = 30;
    int top_m = 1;
    double alpha = 0.05;        // significance threshold for the abstraction filter
    std::string output_dir = "reports";
    std::uint64_t master_seed = 42;
    int jobs = 1;

    EvolutionConfig evolution;

    std::size_t synth_n = 213;
    double synth_noise_sd = 0.10;

    double elasticity_epsilon = kDefaultElasticityEpsilon;
    int bootstrap_resamples = kDefaultBootstrapResamples;
    double bootstrap_level = 0.95;

    void validate() const;  // throws ConfigError
};

/// Applies one key=value pair (the config-file grammar and the CLI override
/// path share this). Throws ConfigError on unknown keys or unparsable values.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);

/// Flat key=value file; blank lines and #-comments ignored.
ExperimentConfig load_config_file(const std::string& path);

}  // namespace digsp
