// Command-line front end: `run` executes a seeded multi-run experiment,
// `analyze` recomputes statistics from persisted reports, `diagnose` prints
// dataset summary diagnostics, `synth` emits the synthetic benchmark CSV.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "digsp/config.hpp"
#include "digsp/data.hpp"
#include "digsp/errors.hpp"
#include "digsp/rng.hpp"
#include "digsp/runner.hpp"

namespace {

struct KeyFlag {
    const char* key;
    const char* help;
};

// Every config-file key doubles as a flag; flags win over the file.
constexpr KeyFlag kKeyFlags[] = {
    {"mode", "digsp | bgp | both (default both)"},
    {"dataset", "dataset CSV path; empty runs the synthetic benchmark"},
    {"scheme", "partition scheme: full | minimal (default full)"},
    {"n_runs", "independent runs per mode (default 30)"},
    {"top_m", "individuals each population sends to the ensemble (default 1)"},
    {"alpha", "significance threshold of the abstraction filter (default 0.05)"},
    {"output_dir", "report directory (default reports)"},
    {"master_seed", "root of every derived random stream (default 42)"},
    {"jobs", "worker threads for independent runs (default 1)"},
    {"population_size", "individuals per population (default 50)"},
    {"max_generations", "generation cap per run (default 300)"},
    {"stall_generations", "run stops after this many unimproved generations (default 30)"},
    {"ahsam_trigger", "per-population stagnation level arming abstraction (default 25)"},
    {"genes_per_individual", "genes per individual (default 3; baseline pins 9)"},
    {"max_tree_depth", "depth cap for every gene (default 15)"},
    {"p_crossover", "crossover fraction of offspring (default 0.84)"},
    {"p_mutation", "mutation fraction of offspring (default 0.14)"},
    {"p_reproduction", "reproduction fraction of offspring (default 0.02)"},
    {"constant_lo", "lower bound of ephemeral constants (default -10)"},
    {"constant_hi", "upper bound of ephemeral constants (default 10)"},
    {"k_folds", "folds of the isolated-fitness cross validation (default 5)"},
    {"lambda1", "elastic-net L1 weight (default 1e-3)"},
    {"lambda2", "elastic-net L2 weight (default 1e-3)"},
    {"synth_n", "rows of the synthetic benchmark (default 213)"},
    {"synth_noise_sd", "noise SD of the synthetic benchmark (default 0.10)"},
    {"elasticity_epsilon", "relative perturbation of the elasticity probe (default 0.01)"},
    {"bootstrap_resamples", "bootstrap resamples for the CI of the mean delta (default 10000)"},
    {"bootstrap_level", "bootstrap confidence level (default 0.95)"},
};

void add_config_flags(CLI::App* cmd, std::string& config_path,
                      std::map<std::string, std::string>& overrides) {
    cmd->add_option("--config", config_path, "flat key=value configuration file");
    for (const auto& kf : kKeyFlags) {
        const std::string key = kf.key;
        const std::string flag =
            (key == "dataset") ? "--dataset,--data" : "--" + key;
        cmd->add_option_function<std::string>(
            flag, [&overrides, key](const std::string& value) { overrides[key] = value; },
            kf.help);
    }
}

digsp::ExperimentConfig resolve_config(const std::string& config_path,
                                       const std::map<std::string, std::string>& overrides) {
    digsp::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = digsp::load_config_file(config_path);
    for (const auto& [key, value] : overrides) digsp::apply_config_entry(cfg, key, value);
    cfg.validate();
    return cfg;
}

int cmd_run(const digsp::ExperimentConfig& cfg) {
    std::cout << "dataset: "
              << (cfg.dataset_path.empty() ? "synthetic benchmark" : cfg.dataset_path) << "\n"
              << "reports: " << cfg.output_dir << "\n";
    const auto reports = digsp::run_experiment(cfg, [](const digsp::RunReport& r) {
        if (r.failed) {
            std::cout << r.mode << " run " << r.run_index << ": FAILED: " << r.error << "\n";
            return;
        }
        char line[160];
        std::snprintf(line, sizeof(line),
                      "%s run %d: val %.4f  test %.4f  %d generations  %.1fs",
                      r.mode.c_str(), r.run_index, r.val_rmse, r.test_rmse, r.generations,
                      r.wall_seconds);
        std::cout << line << "\n";
    });
    std::size_t failed = 0;
    for (const auto& r : reports) failed += r.failed ? 1 : 0;
    std::cout << reports.size() << " reports written";
    if (failed > 0) std::cout << " (" << failed << " failed)";
    std::cout << "\n";
    return 0;
}

int cmd_analyze(const digsp::ExperimentConfig& cfg) {
    const auto reports = digsp::load_reports(cfg.output_dir);
    const std::string text = digsp::analyze_reports(reports, cfg);
    const std::string path =
        (std::filesystem::path(cfg.output_dir) / "analysis.json").string();
    std::ofstream out(path);
    if (!out) throw digsp::IngestionError("cannot write analysis '" + path + "'");
    out << text << '\n';
    std::cout << text << "\n";
    std::cerr << "analysis written to " << path << "\n";
    return 0;
}

int cmd_diagnose(const digsp::ExperimentConfig& cfg) {
    const digsp::Dataset ds = digsp::experiment_dataset(cfg);
    const auto columns = digsp::diagnostics(ds);
    std::printf("%-12s %10s %10s %10s %10s %10s %10s %9s %9s\n", "column", "min", "max",
                "range", "mean", "sd", "median", "skewness", "outlier%");
    for (const auto& c : columns) {
        std::printf("%-12s %10.4g %10.4g %10.4g %10.4g %10.4g %10.4g %9.4g %9.3g\n",
                    c.name.c_str(), c.min, c.max, c.range, c.mean, c.sd, c.median, c.skewness,
                    c.pct_outliers);
    }
    std::printf("n = %zu rows\n", ds.n_rows());
    return 0;
}

int cmd_synth(const digsp::ExperimentConfig& cfg, const std::string& out_path) {
    const digsp::Dataset ds = digsp::synth_superposition(
        cfg.synth_n, cfg.synth_noise_sd, digsp::derive_seed(cfg.master_seed, "synth"));
    digsp::save_csv(ds, out_path);
    std::cout << "wrote " << ds.n_rows() << " rows to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Genetic superposition programming for SFRC shear strength"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> overrides;
    std::string synth_out = "synth.csv";

    CLI::App* run = app.add_subcommand("run", "execute the configured experiment");
    CLI::App* analyze = app.add_subcommand("analyze", "statistics over persisted reports");
    CLI::App* diagnose = app.add_subcommand("diagnose", "dataset summary diagnostics");
    CLI::App* synth = app.add_subcommand("synth", "write the synthetic benchmark CSV");
    for (CLI::App* cmd : {run, analyze, diagnose, synth}) {
        add_config_flags(cmd, config_path, overrides);
    }
    synth->add_option("--out", synth_out, "output CSV path (default synth.csv)");

    try {
        app.parse(argc, argv);
        const digsp::ExperimentConfig cfg = resolve_config(config_path, overrides);
        if (app.got_subcommand(run)) return cmd_run(cfg);
        if (app.got_subcommand(analyze)) return cmd_analyze(cfg);
        if (app.got_subcommand(diagnose)) return cmd_diagnose(cfg);
        return cmd_synth(cfg, synth_out);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const digsp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const digsp::IngestionError& e) {
        std::cerr << "ingestion error: " << e.what() << "\n";
        return 4;
    } catch (const digsp::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 5;
    } catch (const digsp::StructuralError& e) {
        std::cerr << "structural error: " << e.what() << "\n";
        return 6;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
