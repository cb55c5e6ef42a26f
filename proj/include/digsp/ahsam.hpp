#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "digsp/evolution.hpp"
#include "digsp/stats.hpp"

namespace digsp {

/// A fused sub-model promoted to a terminal symbol: the full expansion of its
/// source individual (sum of weighted genes plus intercept) over raw features
/// only. Enters every population's terminal set as a depth-1 leaf.
struct AbstractedFeature {
    std::int32_t id = 0;
    std::string source_population;
    ExprTree expression;
    int creation_generation = 0;
};

/// Abstraction fires only when every population has stagnated for at least
/// trigger generations. Disabled for trigger <= 0 and for single-population
/// (baseline) runs.
bool should_trigger(const std::vector<Population>& pops, int trigger);

struct AbstractionCandidate {
    std::string population_id;
    Individual individual;  // snapshot with stored fit
    double p_value = 1.0;
};

/// Statistical filter: each individual's fused training prediction is one
/// group; an individual is significant when a two-group one-way ANOVA of its
/// predictions against the pooled predictions of all other individuals gives
/// p <= alpha. Candidates come back sorted by isolated fitness (best first).
/// When the sample count does not exceed the individual count (the F test is
/// ill-posed) or when nothing passes, falls back to the per-population best
/// individuals.
std::vector<AbstractionCandidate> anova_filter(const std::vector<Population>& pops,
                                               std::span<const std::vector<double>> train_rows,
                                               double alpha,
                                               const AbstractionRegistry* registry);

/// Materializes the candidate's fused model as one expression tree
/// (sum of beta_j * gene_j plus intercept, zero-weight terms dropped) with
/// any nested abstractions recursively expanded to raw features.
AbstractedFeature compress(const AbstractionCandidate& candidate, std::int32_t id,
                           const AbstractionRegistry& registry, int generation);

struct PruneOutcome {
    bool accepted = false;
    AbstractedFeature feature;     // pruned expression when accepted
    int rounds = 0;                // pruning rounds applied
    double train_rmse = 0.0;       // standalone one-column model, training split
    double val_rmse = 0.0;         // same model on the validation split (log only)
};

/// Standalone-utility gate: fits y ~ z as a one-column linear model on the
/// training split and accepts when its RMSE is at or below the source
/// population's mean isolated fitness. While above, greedily removes the
/// single subtree (a binary node collapsing to one of its children) whose
/// removal most improves that RMSE, up to 10 rounds; rejects when stuck or
/// out of rounds.
PruneOutcome prune_and_validate(const AbstractedFeature& z, const Population& pop,
                                std::span<const std::vector<double>> train_rows,
                                std::span<const double> y_train,
                                std::span<const std::vector<double>> val_rows,
                                std::span<const double> y_val,
                                double lambda1, double lambda2);

/// Registers z and appends its id to every population's terminal set.
/// Existing individuals are untouched; z spreads via future variation.
void inject(const AbstractedFeature& z, std::vector<Population>& pops,
            AbstractionRegistry& registry);

// Activation orchestration ----------------------------------------------------

struct CandidateLog {
    std::string population_id;
    double p_value = 1.0;
    double isolated_fitness = 0.0;
    std::int32_t assigned_id = 0;
    bool accepted = false;
    int prune_rounds = 0;
    double standalone_train_rmse = 0.0;
    double standalone_val_rmse = 0.0;
};

struct ActivationLog {
    int generation = 0;
    std::size_t candidate_count = 0;
    std::vector<CandidateLog> entries;
    std::vector<std::int32_t> accepted_ids;
};

/// One full abstraction pass: filter, then compress/prune/inject candidates
/// in fitness order until three are accepted. Resets every population's
/// stagnation counter afterwards.
ActivationLog run_ahsam_activation(std::vector<Population>& pops,
                                   AbstractionRegistry& registry,
                                   const EvolutionConfig& cfg, double alpha,
                                   int generation,
                                   std::span<const std::vector<double>> train_rows,
                                   std::span<const double> y_train,
                                   std::span<const std::vector<double>> val_rows,
                                   std::span<const double> y_val);

/// Seeds freshly injected abstractions into one population as carrier
/// individuals: each id yields a copy of the population's best individual
/// with one gene replaced by the bare abstracted terminal, overwriting the
/// current worst individuals (never the best). Carriers are evaluated
/// immediately so selection and elitism see real fitness. Without carriers a
/// new feature only enters trees through rare mutation draws, which usually
/// takes longer than the stall window an activation is meant to survive.
void seed_abstraction_carriers(Population& pop, std::span<const std::int32_t> ids,
                               std::span<const std::vector<double>> rows,
                               std::span<const double> y, std::span<const int> fold_of,
                               const EvolutionConfig& cfg,
                               const AbstractionRegistry* registry);

}  // namespace digsp
