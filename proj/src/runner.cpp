#include "digsp/runner.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "digsp/ahsam.hpp"
#include "digsp/analysis.hpp"
#include "digsp/ensemble.hpp"
#include "digsp/errors.hpp"
#include "digsp/evolution.hpp"
#include "digsp/linfit.hpp"
#include "digsp/rng.hpp"
#include "digsp/stats.hpp"

namespace digsp {

namespace {

using nlohmann::json;

std::uint64_t run_seed_for(const ExperimentConfig& cfg, int run_index) {
    return derive_seed(cfg.master_seed, static_cast<std::uint64_t>(run_index));
}

}  // namespace

Dataset experiment_dataset(const ExperimentConfig& cfg) {
    if (!cfg.dataset_path.empty()) return load_csv(cfg.dataset_path);
    return synth_superposition(cfg.synth_n, cfg.synth_noise_sd,
                               derive_seed(cfg.master_seed, "synth"));
}

RunReport run_single(const Dataset& ds, const ExperimentConfig& cfg,
                     const std::string& mode, int run_index) {
    if (mode != "digsp" && mode != "bgp") {
        throw ConfigError("run mode must be 'digsp' or 'bgp', got '" + mode + "'");
    }
    const bool monolithic = (mode == "bgp");
    const std::uint64_t run_seed = run_seed_for(cfg, run_index);
    const std::uint64_t split_seed = derive_seed(run_seed, "split");

    // The baseline always evolves one monolithic population with nine genes
    // over the full feature set and never abstracts.
    const std::string scheme_name = monolithic ? "bgp" : cfg.scheme;
    const PartitionScheme scheme = partition_scheme(scheme_name);
    EvolutionConfig evo = cfg.evolution;
    if (monolithic) {
        evo.genes_per_individual = static_cast<int>(kFeatureCount);
        evo.ahsam_trigger = 0;
    }
    evo.validate();

    SplitSpec split_spec;
    split_spec.seed = split_seed;
    const SplitIndices indices = split(ds, split_spec);
    const Dataset train = subset(ds, indices.train);
    const Dataset val = subset(ds, indices.val);
    const Dataset test = subset(ds, indices.test);

    AbstractionRegistry registry;
    std::vector<Population> pops;
    std::vector<Rng> breed_rngs;
    std::vector<std::vector<int>> fold_of;
    pops.reserve(scheme.groups.size());
    breed_rngs.reserve(scheme.groups.size());
    for (const auto& group : scheme.groups) {
        TerminalSet terminals;
        terminals.variables.reserve(group.features.size());
        for (const std::size_t f : group.features) {
            terminals.variables.push_back(static_cast<std::int32_t>(f));
        }
        breed_rngs.emplace_back(derive_seed(run_seed, "pop:" + group.name));
        pops.push_back(init_population(group.name, terminals, evo, breed_rngs.back()));

        // The fold assignment is a pure function of the run seed and the
        // population, so re-deriving it each generation would reproduce the
        // same folds; computing it once keeps carried-over fitness valid.
        Rng fold_rng(derive_seed(run_seed, "folds:" + group.name));
        fold_of.push_back(make_folds(train.n_rows(), evo.k_folds, fold_rng));
    }

    EnsembleModel best;
    bool have_best = false;
    double stall_reference = 0.0;
    int global_stall = 0;
    int generations = 0;
    std::vector<ActivationLog> activations;

    const auto t0 = std::chrono::steady_clock::now();
    for (int gen = 0; gen < evo.max_generations; ++gen) {
        for (std::size_t i = 0; i < pops.size(); ++i) {
            evaluate_population(pops[i], train.rows, train.target, fold_of[i], evo, &registry);
            update_stagnation(pops[i]);
        }

        EnsembleModel ensemble =
            build_ensemble(pops, cfg.top_m, train.rows, train.target, val.rows, val.target,
                           evo.lambda1, evo.lambda2, &registry);
        generations = gen + 1;

        if (!have_best || ensemble.val_rmse < best.val_rmse) best = ensemble;
        if (!have_best || material_improvement(stall_reference, ensemble.val_rmse)) {
            stall_reference = ensemble.val_rmse;
            global_stall = 0;
        } else {
            ++global_stall;
        }
        have_best = true;

        // The abstraction pass arms when the overall ensemble fitness has not
        // improved for `ahsam_trigger` consecutive generations (or when every
        // population's own counter reaches that length).  The activation does
        // not clear the streak: the trigger fires before the stall limit, and
        // only a material improvement — whether or not it comes from an
        // injected feature — rescues the run from terminating at the limit.
        const bool abstraction_armed =
            evo.ahsam_trigger > 0 && pops.size() >= 2 &&
            (global_stall == evo.ahsam_trigger || should_trigger(pops, evo.ahsam_trigger));
        if (abstraction_armed) {
            ActivationLog act = run_ahsam_activation(pops, registry, evo, cfg.alpha, gen,
                                                     train.rows, train.target, val.rows,
                                                     val.target);
            for (std::size_t i = 0; i < pops.size(); ++i) {
                seed_abstraction_carriers(pops[i], act.accepted_ids, train.rows, train.target,
                                          fold_of[i], evo, &registry);
            }
            activations.push_back(std::move(act));
        }

        if (global_stall >= evo.stall_generations) break;
        if (gen + 1 == evo.max_generations) break;

        for (std::size_t i = 0; i < pops.size(); ++i) {
            next_generation(pops[i], evo, breed_rngs[i], cfg.top_m);
        }
    }
    const auto t1 = std::chrono::steady_clock::now();

    RunReport report;
    report.run_index = run_index;
    report.seed = run_seed;
    report.split_seed = split_seed;
    report.mode = mode;
    report.scheme = scheme_name;
    report.train_rmse = best.train_rmse;
    report.val_rmse = best.val_rmse;
    report.test_rmse = rmse(predict_full(best, test.rows, &registry), test.target);
    report.generations = generations;
    report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    report.parsimony_profile = parsimony(best, &registry);
    report.activations = std::move(activations);
    report.model = serialize_model(best, registry);
    report.x_median = ds.median_row();
    return report;
}

std::vector<RunReport> run_experiment(const ExperimentConfig& cfg,
                                      const std::function<void(const RunReport&)>& on_report) {
    cfg.validate();
    const Dataset ds = experiment_dataset(cfg);

    std::vector<std::string> modes;
    if (cfg.mode == Mode::Both) {
        modes = {"digsp", "bgp"};
    } else {
        modes = {mode_name(cfg.mode)};
    }

    struct Task {
        std::string mode;
        int run_index = 0;
    };
    std::vector<Task> tasks;
    for (const auto& m : modes) {
        for (int i = 0; i < cfg.n_runs; ++i) tasks.push_back({m, i});
    }

    std::vector<RunReport> reports(tasks.size());
    std::atomic<std::size_t> next_task{0};
    std::mutex sink_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t t = next_task.fetch_add(1);
            if (t >= tasks.size()) return;
            const Task& task = tasks[t];
            RunReport report;
            try {
                report = run_single(ds, cfg, task.mode, task.run_index);
            } catch (const std::exception& e) {
                report = RunReport{};
                report.run_index = task.run_index;
                report.mode = task.mode;
                report.scheme = task.mode == "bgp" ? "bgp" : cfg.scheme;
                report.seed = run_seed_for(cfg, task.run_index);
                report.split_seed = derive_seed(report.seed, "split");
                report.failed = true;
                report.error = e.what();
            }
            const std::lock_guard<std::mutex> lock(sink_mutex);
            save_report(report, cfg.output_dir);
            if (on_report) on_report(report);
            reports[t] = std::move(report);
        }
    };

    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, cfg.jobs)), tasks.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }

    std::sort(reports.begin(), reports.end(), [](const RunReport& a, const RunReport& b) {
        if (a.mode != b.mode) return a.mode < b.mode;
        return a.run_index < b.run_index;
    });
    write_summary_csv(reports,
                      (std::filesystem::path(cfg.output_dir) / "summary.csv").string());
    return reports;
}

namespace {

json stats_to_json(const SummaryStats& s) {
    return json{{"median", s.median}, {"iqr", s.iqr}, {"mean", s.mean}, {"sd", s.sd}};
}

json summarize_to_json(const std::vector<double>& values) {
    return stats_to_json(summarize(values));
}

/// Per-mode block: metric summaries over the non-failed runs.
json mode_summary(const std::vector<const RunReport*>& runs, std::size_t n_failed) {
    json out;
    out["runs"] = runs.size() + n_failed;
    out["failed"] = n_failed;
    if (runs.empty()) return out;

    std::vector<double> train, val, test, gens, wall, n_terms, tree_size, op_count;
    std::size_t activations = 0;
    for (const auto* r : runs) {
        train.push_back(r->train_rmse);
        val.push_back(r->val_rmse);
        test.push_back(r->test_rmse);
        gens.push_back(static_cast<double>(r->generations));
        wall.push_back(r->wall_seconds);
        n_terms.push_back(static_cast<double>(r->parsimony_profile.n_terms));
        tree_size.push_back(static_cast<double>(r->parsimony_profile.tree_size_nodes));
        op_count.push_back(static_cast<double>(r->parsimony_profile.operator_count));
        activations += r->activations.size();
    }
    out["train_rmse"] = summarize_to_json(train);
    out["val_rmse"] = summarize_to_json(val);
    out["test_rmse"] = summarize_to_json(test);
    out["parsimony"] = json{{"n_terms_median", median_of(n_terms)},
                            {"tree_size_median", median_of(tree_size)},
                            {"operator_count_median", median_of(op_count)}};
    out["generations_mean"] = mean_of(gens);
    out["wall_seconds_total"] = std::accumulate(wall.begin(), wall.end(), 0.0);
    out["abstraction_activations_total"] = activations;
    return out;
}

json paired_section(const std::vector<const RunReport*>& digsp,
                    const std::vector<const RunReport*>& bgp,
                    const ExperimentConfig& cfg) {
    std::map<int, const RunReport*> by_index;
    for (const auto* r : digsp) by_index[r->run_index] = r;

    std::vector<double> delta_test;        // baseline minus treatment: >0 means better
    std::vector<double> digsp_train, bgp_train;
    for (const auto* b : bgp) {
        const auto it = by_index.find(b->run_index);
        if (it == by_index.end()) continue;
        delta_test.push_back(b->test_rmse - it->second->test_rmse);
        digsp_train.push_back(it->second->train_rmse);
        bgp_train.push_back(b->train_rmse);
    }

    json out;
    out["n_pairs"] = delta_test.size();
    if (delta_test.size() < 2) {
        out["notice"] = "fewer than two matched run pairs; paired tests skipped";
        return out;
    }

    json test_block;
    test_block["delta_mean"] = mean_of(delta_test);
    test_block["delta_median"] = median_of(delta_test);
    const auto ci = bootstrap_ci_mean(delta_test, cfg.bootstrap_resamples, cfg.bootstrap_level,
                                      derive_seed(cfg.master_seed, "bootstrap"));
    test_block["delta_mean_ci"] = json::array({ci.first, ci.second});
    test_block["ci_level"] = cfg.bootstrap_level;
    try {
        const PairedTestResult sr = wilcoxon_signed_rank(delta_test, Alternative::Greater);
        test_block["signed_rank"] = json{{"w_statistic", sr.w_statistic},
                                         {"p_one_sided", sr.p_value},
                                         {"exact", sr.exact},
                                         {"rank_biserial", sr.rank_biserial},
                                         {"win_fraction", sr.win_fraction},
                                         {"n_nonzero", sr.n_nonzero}};
    } catch (const InputError&) {
        test_block["signed_rank"] = json{{"notice", "all paired deltas are zero"}};
    }
    out["test_rmse_bgp_minus_digsp"] = test_block;

    const RankSumResult rs = wilcoxon_rank_sum(digsp_train, bgp_train);
    out["train_rmse_rank_sum"] = json{{"statistic", rs.statistic},
                                      {"p_two_sided", rs.p_two_sided},
                                      {"exact", rs.exact}};
    return out;
}

struct RestoredRun {
    const RunReport* report;
    RestoredModel restored;
};

json contributions_section(const std::vector<RestoredRun>& runs) {
    // Canonical emission order; only mechanisms that actually appear are kept.
    const std::array<std::string, 4> order = {"fiber", "concrete", "steel", "mixed"};
    std::map<std::string, std::vector<double>> contribution, share;
    std::vector<double> intercepts;
    for (const auto& run : runs) {
        const ContributionBreakdown breakdown = mechanism_contributions(
            run.restored.model, run.report->x_median, &run.restored.registry);
        intercepts.push_back(breakdown.intercept);
        for (const auto& m : breakdown.mechanisms) {
            contribution[m.mechanism].push_back(m.contribution);
            share[m.mechanism].push_back(m.share_pct);
        }
    }
    json mechanisms = json::array();
    for (const auto& name : order) {
        const auto it = contribution.find(name);
        if (it == contribution.end()) continue;
        mechanisms.push_back(json{{"mechanism", name},
                                  {"contribution_mean", mean_of(it->second)},
                                  {"contribution_sd", sample_sd(it->second)},
                                  {"share_pct_mean", mean_of(share[name])},
                                  {"share_pct_sd", sample_sd(share[name])}});
    }
    return json{{"mechanisms", mechanisms},
                {"intercept_mean", mean_of(intercepts)},
                {"intercept_sd", sample_sd(intercepts)}};
}

json elasticity_section(const std::vector<RestoredRun>& runs, double epsilon) {
    const std::array<std::string, 4> probed = {"fc", "rho", "Vf", "a_over_d"};
    json out = json::array();
    for (const auto& name : probed) {
        const std::size_t variable = feature_index(name);
        ElasticityResult result;
        result.variable = name;
        result.epsilon = epsilon;
        for (const auto& run : runs) {
            result.values.push_back(elasticity(run.restored.model, run.report->x_median,
                                               variable, epsilon, &run.restored.registry));
        }
        result.stats = summarize(result.values);
        out.push_back(json{{"variable", result.variable},
                           {"epsilon", result.epsilon},
                           {"values", result.values},
                           {"stats", stats_to_json(result.stats)}});
    }
    return out;
}

}  // namespace

std::string analyze_reports(const std::vector<RunReport>& reports,
                            const ExperimentConfig& cfg) {
    if (reports.empty()) throw InputError("no run reports to analyze");

    std::map<std::string, std::vector<const RunReport*>> ok;
    std::map<std::string, std::size_t> failed;
    for (const auto& r : reports) {
        if (r.failed) {
            ++failed[r.mode];
        } else {
            ok[r.mode].push_back(&r);
        }
    }

    json out;
    json modes;
    for (const auto& [mode, runs] : ok) {
        modes[mode] = mode_summary(runs, failed.count(mode) ? failed[mode] : 0);
    }
    for (const auto& [mode, n] : failed) {
        if (!ok.count(mode)) modes[mode] = mode_summary({}, n);
    }
    out["modes"] = modes;

    const bool have_digsp = ok.count("digsp") && !ok["digsp"].empty();
    const bool have_bgp = ok.count("bgp") && !ok["bgp"].empty();
    if (have_digsp && have_bgp) {
        out["paired"] = paired_section(ok["digsp"], ok["bgp"], cfg);
    } else {
        out["notice"] = "reports cover a single mode; paired comparison skipped";
    }

    json contributions;
    json elasticities;
    for (const auto& [mode, runs] : ok) {
        if (runs.empty()) continue;
        std::vector<RestoredRun> restored;
        restored.reserve(runs.size());
        for (const auto* r : runs) restored.push_back({r, restore_model(r->model)});
        contributions[mode] = contributions_section(restored);
        elasticities[mode] = elasticity_section(restored, cfg.elasticity_epsilon);
    }
    out["contributions"] = contributions;
    out["elasticity"] = elasticities;

    return out.dump(2);
}

}  // namespace digsp
