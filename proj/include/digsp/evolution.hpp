#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "digsp/exprtree.hpp"
#include "digsp/linfit.hpp"
#include "digsp/rng.hpp"

namespace digsp {

/// One multi-gene program: a fixed-length vector of expression trees whose
/// outputs are fused by an elastic-net fit. isolated_fitness is the k-fold
/// cross-validated RMSE of that fusion on the training split.
struct Individual {
    std::vector<ExprTree> genes;
    std::optional<LinearFit> fit;
    std::optional<double> isolated_fitness;

    bool evaluated() const { return isolated_fitness.has_value() && fit.has_value(); }
    int total_nodes() const;
};

/// Orders individuals for selection and elitism: lower CV-RMSE first, ties
/// broken by fewer total nodes, then by earlier index.
bool individual_precedes(const Individual& a, std::size_t index_a,
                         const Individual& b, std::size_t index_b);

struct Population {
    std::string id;  // partition group name
    TerminalSet terminal_set;
    std::vector<Individual> individuals;
    std::vector<double> best_fitness_history;
    int stagnation_counter = 0;

    // Incremental stagnation bookkeeping: how many history entries have been
    // folded into the counter, and the reference fitness improvements are
    // measured against (the best value as of the last counted improvement).
    std::size_t history_consumed = 0;
    double stagnation_reference = 0.0;
    bool has_stagnation_reference = false;

    /// Index of the best evaluated individual under individual_precedes.
    std::size_t best_index() const;
    const Individual& best() const { return individuals[best_index()]; }

    double mean_isolated_fitness() const;
};

struct EvolutionConfig {
    int population_size = 50;
    int max_generations = 300;
    int stall_generations = 30;
    int ahsam_trigger = 25;  // generations of all-population stagnation; <= 0 disables
    int genes_per_individual = 3;
    int max_tree_depth = 15;
    double p_crossover = 0.84;
    double p_mutation = 0.14;
    double p_reproduction = 0.02;
    double constant_lo = -10.0;
    double constant_hi = 10.0;
    int k_folds = 5;
    double lambda1 = kDefaultLambda1;
    double lambda2 = kDefaultLambda2;

    /// Throws ConfigError on out-of-range values or probabilities that do not
    /// sum to 1 within 1e-12.
    void validate() const;
};

/// Ramped half-and-half initialization: per gene, a uniformly drawn depth in
/// [2, min(6, max_tree_depth)] and alternating grow/full construction.
Population init_population(std::string id, TerminalSet terminals,
                           const EvolutionConfig& cfg, Rng& rng);

/// Output of every gene on every row: one column per gene.
std::vector<std::vector<double>> gene_outputs(const Individual& ind,
                                              std::span<const std::vector<double>> rows,
                                              const AbstractionRegistry* registry);

/// The individual's fused prediction on raw rows using its stored fit.
std::vector<double> individual_predict(const Individual& ind,
                                       std::span<const std::vector<double>> rows,
                                       const AbstractionRegistry* registry);

/// The individual's fused model as one expression tree: sum of
/// beta_j * gene_j plus the intercept, with zero-weight terms dropped and
/// unit weights folded away. Abstracted terminals are NOT expanded here.
ExprTree fused_expression(const Individual& ind);

/// Fills fit (elastic net on the full training split) and isolated_fitness
/// (k-fold CV-RMSE with the supplied shared fold assignment). A degenerate
/// all-constant design collapses to the intercept-only model without error.
void evaluate_individual(Individual& ind, std::span<const std::vector<double>> rows,
                         std::span<const double> y, std::span<const int> fold_of,
                         const EvolutionConfig& cfg, const AbstractionRegistry* registry);

/// Evaluates every not-yet-evaluated individual (fresh offspring; carried-over
/// copies keep their value, which is identical under the shared folds), then
/// appends the generation's best isolated fitness to best_fitness_history.
void evaluate_population(Population& pop, std::span<const std::vector<double>> rows,
                         std::span<const double> y, std::span<const int> fold_of,
                         const EvolutionConfig& cfg, const AbstractionRegistry* registry);

/// Tournament selection, size 4, sampled with replacement; returns the index
/// of the winner under individual_precedes.
std::size_t select_parent(const Population& pop, Rng& rng);

/// Breeds the next generation: elite_count best individuals are copied
/// unchanged, remaining slots are filled by crossover (two children per
/// event, one aligned gene slot crossed), mutation, or reproduction chosen
/// with the configured probabilities. Population size is preserved.
void next_generation(Population& pop, const EvolutionConfig& cfg, Rng& rng,
                     int elite_count = 1);

/// True when `value` beats `reference` by more than 1e-9 relative — the
/// betterment rule shared by the per-population stagnation counters and the
/// run-level stall check on the ensemble validation error.
bool material_improvement(double reference, double value);

/// Folds history entries newer than history_consumed into the stagnation
/// counter: an entry improving on the reference by more than 1e-9 relative
/// resets the counter to 0 and moves the reference; any other entry
/// increments it.
void update_stagnation(Population& pop);

/// Resets the stagnation counter (the improvement reference is kept).
void reset_stagnation(Population& pop);

}  // namespace digsp
