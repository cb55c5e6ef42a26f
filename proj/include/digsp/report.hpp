#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "digsp/ahsam.hpp"
#include "digsp/analysis.hpp"
#include "digsp/ensemble.hpp"

namespace digsp {

/// Text form of an ensemble, sufficient to rebuild it for re-analysis:
/// member genes as parseable expressions, the two fusion layers' weights,
/// and every abstracted feature the genes reference.
struct SerializedMember {
    std::string population_id;
    std::vector<std::string> genes;
    std::vector<double> beta;
    double intercept = 0.0;
};

struct SerializedModel {
    std::vector<SerializedMember> members;
    std::vector<double> fusion_beta;
    double fusion_intercept = 0.0;
    double train_rmse = 0.0;
    double val_rmse = 0.0;
    std::vector<std::pair<std::int32_t, std::string>> abstractions;  // id, expression
};

SerializedModel serialize_model(const EnsembleModel& model, const AbstractionRegistry& registry);

/// Rebuilt model plus the registry its expressions reference.
struct RestoredModel {
    EnsembleModel model;
    AbstractionRegistry registry;
};

RestoredModel restore_model(const SerializedModel& serialized);

/// Everything one run produced. Self-contained: re-analysis never needs the
/// run to be repeated.
struct RunReport {
    int run_index = 0;
    std::uint64_t seed = 0;       // derived run seed
    std::uint64_t split_seed = 0;
    std::string mode;             // "digsp" or "bgp"
    std::string scheme;
    bool failed = false;
    std::string error;

    double train_rmse = 0.0;
    double val_rmse = 0.0;
    double test_rmse = 0.0;
    int generations = 0;
    double wall_seconds = 0.0;  // evolve loop only

    ParsimonyProfile parsimony_profile;
    std::vector<ActivationLog> activations;
    SerializedModel model;
    std::vector<double> x_median;  // per-feature medians of the full dataset
};

std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);

/// Writes {output_dir}/{mode}_run{index}.json; returns the path.
std::string save_report(const RunReport& report, const std::string& output_dir);
RunReport load_report(const std::string& path);

/// All *.json run reports in a directory, sorted by (mode, run_index).
std::vector<RunReport> load_reports(const std::string& dir);

/// One row per run: the headline metrics of every report.
void write_summary_csv(const std::vector<RunReport>& reports, const std::string& path);

}  // namespace digsp
