#pragma once

#include <functional>
#include <string>
#include <vector>

#include "digsp/config.hpp"
#include "digsp/data.hpp"
#include "digsp/report.hpp"

namespace digsp {

/// The experiment's dataset: the configured CSV, or the synthetic
/// superposition benchmark when no path is set.
Dataset experiment_dataset(const ExperimentConfig& cfg);

/// One full evolution run of `mode` ("digsp" or "bgp") at `run_index`.
/// All randomness derives from the master seed and the run index alone, so
/// the two modes of the same run index share their data split (paired runs)
/// and repeated invocations reproduce the report bit-for-bit.
RunReport run_single(const Dataset& ds, const ExperimentConfig& cfg,
                     const std::string& mode, int run_index);

/// Executes every (mode, run-index) pair, persisting each report into
/// cfg.output_dir as it completes plus a summary.csv at the end. A failing
/// run is recorded as a failed report and never aborts the others. With
/// cfg.jobs > 1 runs execute on a thread pool. `on_report` (optional) fires
/// after each run, serialized by a lock.
std::vector<RunReport> run_experiment(
    const ExperimentConfig& cfg,
    const std::function<void(const RunReport&)>& on_report = {});

/// Cross-run statistics as a JSON document: per-mode metric summaries,
/// paired tests on matched run indices (one-sided signed-rank on test RMSE,
/// two-sided rank-sum on train RMSE, bootstrap CI of the mean test-RMSE
/// delta), mechanism contributions at the median point, and elasticities of
/// the probed drivers. Works from persisted reports alone.
std::string analyze_reports(const std::vector<RunReport>& reports,
                            const ExperimentConfig& cfg);

}  // namespace digsp
