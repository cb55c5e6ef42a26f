#include "digsp/ahsam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "digsp/errors.hpp"

namespace digsp {

bool should_trigger(const std::vector<Population>& pops, int trigger) {
    if (trigger <= 0) return false;
    if (pops.size() < 2) return false;  // baseline mode: abstraction disabled
    for (const auto& pop : pops) {
        if (pop.stagnation_counter < trigger) return false;
    }
    return true;
}

namespace {

/// True when the candidate's fused training predictions sit within 1% of
/// prediction spread of an already-registered abstraction's column. Repeat
/// activations in a converged population would otherwise keep re-donating the
/// same expression (modulo constant jitter), and re-injecting it adds nothing.
bool functionally_duplicates_registry(const Individual& ind,
                                      std::span<const std::vector<double>> train_rows,
                                      const AbstractionRegistry& registry) {
    const std::vector<double> pred = individual_predict(ind, train_rows, &registry);
    double mean = 0.0;
    for (double v : pred) mean += v;
    mean /= static_cast<double>(pred.size());
    double var = 0.0;
    for (double v : pred) var += (v - mean) * (v - mean);
    const double spread = std::sqrt(var / static_cast<double>(pred.size()));
    const double tol = std::max(0.01 * spread, 1e-12);

    for (const auto& [id, expr] : registry.all()) {
        double dist2 = 0.0;
        for (std::size_t r = 0; r < train_rows.size(); ++r) {
            const double d = expr.evaluate(train_rows[r], &registry) - pred[r];
            dist2 += d * d;
        }
        if (std::sqrt(dist2 / static_cast<double>(pred.size())) <= tol) return true;
    }
    return false;
}

std::vector<AbstractionCandidate> per_population_bests(
    const std::vector<Population>& pops, std::span<const std::vector<double>> train_rows,
    const AbstractionRegistry* registry) {
    std::vector<AbstractionCandidate> out;
    out.reserve(pops.size());
    for (const auto& pop : pops) {
        // Best individual that is functionally novel against the registry;
        // the plain best when every individual duplicates it.
        std::vector<std::size_t> order(pop.individuals.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&pop](std::size_t a, std::size_t b) {
            return individual_precedes(pop.individuals[a], a, pop.individuals[b], b);
        });
        const Individual* pick = &pop.individuals[order.front()];
        if (registry != nullptr && !registry->empty()) {
            for (std::size_t idx : order) {
                if (!functionally_duplicates_registry(pop.individuals[idx], train_rows,
                                                      *registry)) {
                    pick = &pop.individuals[idx];
                    break;
                }
            }
        }
        out.push_back({pop.id, *pick, 1.0});
    }
    std::sort(out.begin(), out.end(), [](const AbstractionCandidate& a,
                                         const AbstractionCandidate& b) {
        return individual_precedes(a.individual, 0, b.individual, 0);
    });
    return out;
}

}  // namespace

std::vector<AbstractionCandidate> anova_filter(const std::vector<Population>& pops,
                                               std::span<const std::vector<double>> train_rows,
                                               double alpha,
                                               const AbstractionRegistry* registry) {
    if (pops.empty()) throw InputError("anova_filter: no populations");

    // Fused training predictions, one group per individual.
    struct Entry {
        const Population* pop;
        const Individual* ind;
        std::vector<double> pred;
    };
    std::vector<Entry> entries;
    for (const auto& pop : pops) {
        for (const auto& ind : pop.individuals) {
            entries.push_back({&pop, &ind, individual_predict(ind, train_rows, registry)});
        }
    }
    if (entries.size() < 2) throw InputError("anova_filter: needs at least two individuals");

    const std::size_t k = entries.size();
    const std::size_t n = train_rows.size();

    std::vector<AbstractionCandidate> out;
    if (n > k) {
        for (std::size_t i = 0; i < k; ++i) {
            // This individual's predictions against everyone else's, pooled.
            std::vector<double> rest;
            rest.reserve((k - 1) * n);
            for (std::size_t j = 0; j < k; ++j) {
                if (j == i) continue;
                rest.insert(rest.end(), entries[j].pred.begin(), entries[j].pred.end());
            }
            const AnovaResult r = one_way_anova({entries[i].pred, rest});
            if (r.p_value <= alpha) {
                out.push_back({entries[i].pop->id, *entries[i].ind, r.p_value});
            }
        }
        std::sort(out.begin(), out.end(), [](const AbstractionCandidate& a,
                                             const AbstractionCandidate& b) {
            return individual_precedes(a.individual, 0, b.individual, 0);
        });
    }
    // Degenerate F test (n <= k) or an empty pass: keep the filter useful by
    // falling back to the per-population best individuals.
    if (out.empty()) out = per_population_bests(pops, train_rows, registry);
    return out;
}

AbstractedFeature compress(const AbstractionCandidate& candidate, std::int32_t id,
                           const AbstractionRegistry& registry, int generation) {
    const Individual& ind = candidate.individual;
    if (!ind.fit) throw StructuralError("compress: candidate has no stored fit");

    AbstractedFeature z;
    z.id = id;
    z.source_population = candidate.population_id;
    z.expression = expand_abstractions(fused_expression(ind), registry);
    z.creation_generation = generation;
    return z;
}

namespace {

double standalone_rmse(const ExprTree& expr, std::span<const std::vector<double>> rows,
                       std::span<const double> y, double lambda1, double lambda2) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (const auto& row : rows) col.push_back(expr.evaluate(row));
    const auto X = DesignMatrix::from_columns({std::move(col)});
    return fit_elastic_net(X, y, lambda1, lambda2).train_rmse;
}

/// Best single-subtree removal: every binary node may collapse to either
/// child. Returns the collapsed tree with the lowest standalone RMSE, or
/// nothing when the tree has no binary node.
std::optional<std::pair<ExprTree, double>> best_removal(
    const ExprTree& tree, std::span<const std::vector<double>> rows,
    std::span<const double> y, double lambda1, double lambda2) {
    std::optional<std::pair<ExprTree, double>> best;
    const auto& nodes = tree.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].kind != NodeKind::BinaryOp) continue;
        const std::size_t left = i + 1;
        const std::size_t right = left + static_cast<std::size_t>(nodes[left].subtree);
        for (const std::size_t keep : {left, right}) {
            ExprTree candidate = tree.replace_subtree(i, tree.subtree_at(keep));
            const double r = standalone_rmse(candidate, rows, y, lambda1, lambda2);
            if (!best || r < best->second) best = {std::move(candidate), r};
        }
    }
    return best;
}

}  // namespace

PruneOutcome prune_and_validate(const AbstractedFeature& z, const Population& pop,
                                std::span<const std::vector<double>> train_rows,
                                std::span<const double> y_train,
                                std::span<const std::vector<double>> val_rows,
                                std::span<const double> y_val,
                                double lambda1, double lambda2) {
    constexpr int kMaxRounds = 10;
    const double baseline = pop.mean_isolated_fitness();

    PruneOutcome out;
    out.feature = z;
    out.train_rmse = standalone_rmse(z.expression, train_rows, y_train, lambda1, lambda2);

    while (out.train_rmse > baseline && out.rounds < kMaxRounds) {
        auto step = best_removal(out.feature.expression, train_rows, y_train, lambda1, lambda2);
        if (!step || step->second >= out.train_rmse) break;  // stuck: no removal helps
        out.feature.expression = std::move(step->first);
        out.train_rmse = step->second;
        out.rounds += 1;
    }

    out.accepted = out.train_rmse <= baseline;
    out.val_rmse = standalone_rmse(out.feature.expression, val_rows, y_val, lambda1, lambda2);
    return out;
}

void inject(const AbstractedFeature& z, std::vector<Population>& pops,
            AbstractionRegistry& registry) {
    registry.add(z.id, z.expression);  // throws on duplicate id
    for (auto& pop : pops) pop.terminal_set.abstractions.push_back(z.id);
}

ActivationLog run_ahsam_activation(std::vector<Population>& pops,
                                   AbstractionRegistry& registry,
                                   const EvolutionConfig& cfg, double alpha,
                                   int generation,
                                   std::span<const std::vector<double>> train_rows,
                                   std::span<const double> y_train,
                                   std::span<const std::vector<double>> val_rows,
                                   std::span<const double> y_val) {
    constexpr int kMaxAcceptedPerActivation = 3;

    ActivationLog log;
    log.generation = generation;

    const auto candidates = anova_filter(pops, train_rows, alpha, &registry);
    log.candidate_count = candidates.size();

    auto pop_by_id = [&pops](const std::string& id) -> const Population& {
        for (const auto& p : pops) {
            if (p.id == id) return p;
        }
        throw StructuralError("activation candidate from unknown population '" + id + "'");
    };

    for (const auto& cand : candidates) {
        if (static_cast<int>(log.accepted_ids.size()) >= kMaxAcceptedPerActivation) break;

        CandidateLog entry;
        entry.population_id = cand.population_id;
        entry.p_value = cand.p_value;
        entry.isolated_fitness = *cand.individual.isolated_fitness;
        entry.assigned_id = registry.next_id();

        const AbstractedFeature z = compress(cand, entry.assigned_id, registry, generation);
        const PruneOutcome pruned = prune_and_validate(z, pop_by_id(cand.population_id),
                                                       train_rows, y_train, val_rows, y_val,
                                                       cfg.lambda1, cfg.lambda2);
        entry.accepted = pruned.accepted;
        entry.prune_rounds = pruned.rounds;
        entry.standalone_train_rmse = pruned.train_rmse;
        entry.standalone_val_rmse = pruned.val_rmse;
        if (pruned.accepted) {
            inject(pruned.feature, pops, registry);
            log.accepted_ids.push_back(pruned.feature.id);
        }
        log.entries.push_back(std::move(entry));
    }

    // Whatever was (or was not) accepted, the populations get a fresh window
    // before the next trigger.
    for (auto& pop : pops) reset_stagnation(pop);
    return log;
}

void seed_abstraction_carriers(Population& pop, std::span<const std::int32_t> ids,
                               std::span<const std::vector<double>> rows,
                               std::span<const double> y, std::span<const int> fold_of,
                               const EvolutionConfig& cfg,
                               const AbstractionRegistry* registry) {
    const std::size_t n = pop.individuals.size();
    if (ids.empty() || n < 2) return;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&pop](std::size_t a, std::size_t b) {
        return individual_precedes(pop.individuals[a], a, pop.individuals[b], b);
    });

    const Individual champion = pop.individuals[order.front()];
    const std::size_t n_seed = std::min(ids.size(), n - 1);
    for (std::size_t k = 0; k < n_seed; ++k) {
        Individual carrier = champion;
        carrier.genes[k % carrier.genes.size()] = ExprTree::abstracted(ids[k]);
        carrier.fit.reset();
        carrier.isolated_fitness.reset();
        evaluate_individual(carrier, rows, y, fold_of, cfg, registry);
        pop.individuals[order[n - 1 - k]] = std::move(carrier);
    }
}

}  // namespace digsp
