#include "digsp/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "digsp/errors.hpp"

namespace digsp {

int Individual::total_nodes() const {
    int n = 0;
    for (const auto& g : genes) n += g.node_count();
    return n;
}

bool individual_precedes(const Individual& a, std::size_t index_a,
                         const Individual& b, std::size_t index_b) {
    if (!a.isolated_fitness || !b.isolated_fitness) {
        throw StructuralError("individual comparison before evaluation");
    }
    if (*a.isolated_fitness != *b.isolated_fitness) {
        return *a.isolated_fitness < *b.isolated_fitness;
    }
    const int na = a.total_nodes();
    const int nb = b.total_nodes();
    if (na != nb) return na < nb;
    return index_a < index_b;
}

std::size_t Population::best_index() const {
    if (individuals.empty()) throw StructuralError("best_index on empty population");
    std::size_t best = 0;
    for (std::size_t i = 1; i < individuals.size(); ++i) {
        if (individual_precedes(individuals[i], i, individuals[best], best)) best = i;
    }
    return best;
}

double Population::mean_isolated_fitness() const {
    if (individuals.empty()) throw StructuralError("mean fitness on empty population");
    double s = 0.0;
    for (const auto& ind : individuals) {
        if (!ind.isolated_fitness) throw StructuralError("mean fitness before evaluation");
        s += *ind.isolated_fitness;
    }
    return s / static_cast<double>(individuals.size());
}

void EvolutionConfig::validate() const {
    if (population_size < 2) throw ConfigError("population_size must be >= 2");
    if (max_generations < 1) throw ConfigError("max_generations must be >= 1");
    if (stall_generations < 1) throw ConfigError("stall_generations must be >= 1");
    if (genes_per_individual < 1) throw ConfigError("genes_per_individual must be >= 1");
    if (max_tree_depth < 2) throw ConfigError("max_tree_depth must be >= 2");
    if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
    if (p_crossover < 0.0 || p_mutation < 0.0 || p_reproduction < 0.0) {
        throw ConfigError("operator probabilities must be non-negative");
    }
    const double sum = p_crossover + p_mutation + p_reproduction;
    if (std::abs(sum - 1.0) > 1e-12) {
        throw ConfigError("operator probabilities must sum to 1");
    }
    if (!(constant_lo < constant_hi)) throw ConfigError("constant range must be non-empty");
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("lambda penalties must be non-negative");
}

Population init_population(std::string id, TerminalSet terminals,
                           const EvolutionConfig& cfg, Rng& rng) {
    cfg.validate();
    Population pop;
    pop.id = std::move(id);
    pop.terminal_set = std::move(terminals);
    pop.terminal_set.constant_lo = cfg.constant_lo;
    pop.terminal_set.constant_hi = cfg.constant_hi;
    pop.individuals.resize(cfg.population_size);

    const int depth_hi = std::min(6, cfg.max_tree_depth);
    bool use_grow = true;
    for (auto& ind : pop.individuals) {
        ind.genes.reserve(cfg.genes_per_individual);
        for (int g = 0; g < cfg.genes_per_individual; ++g) {
            const int depth = 2 + static_cast<int>(rng.uniform_index(depth_hi - 1));
            ind.genes.push_back(use_grow ? grow_init(pop.terminal_set, depth, rng)
                                         : full_init(pop.terminal_set, depth, rng));
            use_grow = !use_grow;
        }
    }
    return pop;
}

std::vector<std::vector<double>> gene_outputs(const Individual& ind,
                                              std::span<const std::vector<double>> rows,
                                              const AbstractionRegistry* registry) {
    std::vector<std::vector<double>> cols(ind.genes.size());
    for (std::size_t j = 0; j < ind.genes.size(); ++j) {
        cols[j].reserve(rows.size());
        for (const auto& row : rows) cols[j].push_back(ind.genes[j].evaluate(row, registry));
    }
    return cols;
}

std::vector<double> individual_predict(const Individual& ind,
                                       std::span<const std::vector<double>> rows,
                                       const AbstractionRegistry* registry) {
    if (!ind.fit) throw StructuralError("individual_predict before evaluation");
    const auto X = DesignMatrix::from_columns(gene_outputs(ind, rows, registry));
    return predict(*ind.fit, X);
}

ExprTree fused_expression(const Individual& ind) {
    if (!ind.fit) throw StructuralError("fused_expression before evaluation");
    const LinearFit& fit = *ind.fit;

    ExprTree sum;
    bool have_term = false;
    for (std::size_t j = 0; j < ind.genes.size(); ++j) {
        const double b = fit.beta[j];
        if (b == 0.0) continue;
        ExprTree term = (b == 1.0)
                            ? ind.genes[j]
                            : ExprTree::binary(BinaryOp::Mul, ExprTree::constant(b), ind.genes[j]);
        sum = have_term ? ExprTree::binary(BinaryOp::Add, std::move(sum), std::move(term))
                        : std::move(term);
        have_term = true;
    }
    if (!have_term) return ExprTree::constant(fit.intercept);
    if (fit.intercept != 0.0) {
        sum = ExprTree::binary(BinaryOp::Add, std::move(sum), ExprTree::constant(fit.intercept));
    }
    return sum;
}

void evaluate_individual(Individual& ind, std::span<const std::vector<double>> rows,
                         std::span<const double> y, std::span<const int> fold_of,
                         const EvolutionConfig& cfg, const AbstractionRegistry* registry) {
    const auto X = DesignMatrix::from_columns(gene_outputs(ind, rows, registry));
    ind.isolated_fitness =
        kfold_cv_rmse(X, y, fold_of, cfg.k_folds, cfg.lambda1, cfg.lambda2);
    ind.fit = fit_elastic_net(X, y, cfg.lambda1, cfg.lambda2);
}

void evaluate_population(Population& pop, std::span<const std::vector<double>> rows,
                         std::span<const double> y, std::span<const int> fold_of,
                         const EvolutionConfig& cfg, const AbstractionRegistry* registry) {
    for (auto& ind : pop.individuals) {
        if (!ind.evaluated()) evaluate_individual(ind, rows, y, fold_of, cfg, registry);
    }
    pop.best_fitness_history.push_back(*pop.best().isolated_fitness);
}

std::size_t select_parent(const Population& pop, Rng& rng) {
    constexpr int kTournamentSize = 4;
    const std::size_t n = pop.individuals.size();
    std::size_t best = rng.uniform_index(n);
    for (int t = 1; t < kTournamentSize; ++t) {
        const std::size_t c = rng.uniform_index(n);
        if (individual_precedes(pop.individuals[c], c, pop.individuals[best], best)) best = c;
    }
    return best;
}

void next_generation(Population& pop, const EvolutionConfig& cfg, Rng& rng,
                     int elite_count) {
    const std::size_t n = pop.individuals.size();
    if (n == 0) throw StructuralError("next_generation on empty population");
    if (elite_count < 1) elite_count = 1;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return individual_precedes(pop.individuals[a], a, pop.individuals[b], b);
    });

    std::vector<Individual> next;
    next.reserve(n);
    const std::size_t n_elite = std::min<std::size_t>(elite_count, n);
    for (std::size_t e = 0; e < n_elite; ++e) next.push_back(pop.individuals[order[e]]);

    const std::size_t n_genes = pop.individuals.front().genes.size();
    while (next.size() < n) {
        const double u = rng.uniform();
        if (u < cfg.p_crossover) {
            const Individual& pa = pop.individuals[select_parent(pop, rng)];
            const Individual& pb = pop.individuals[select_parent(pop, rng)];
            const std::size_t slot = rng.uniform_index(n_genes);
            auto [ga, gb] =
                subtree_crossover(pa.genes[slot], pb.genes[slot], cfg.max_tree_depth, rng);
            Individual child_a;
            child_a.genes = pa.genes;
            child_a.genes[slot] = std::move(ga);
            next.push_back(std::move(child_a));
            if (next.size() < n) {
                Individual child_b;
                child_b.genes = pb.genes;
                child_b.genes[slot] = std::move(gb);
                next.push_back(std::move(child_b));
            }
        } else if (u < cfg.p_crossover + cfg.p_mutation) {
            const Individual& parent = pop.individuals[select_parent(pop, rng)];
            const std::size_t slot = rng.uniform_index(n_genes);
            Individual child;
            child.genes = parent.genes;
            child.genes[slot] =
                subtree_mutation(parent.genes[slot], pop.terminal_set, cfg.max_tree_depth, rng);
            next.push_back(std::move(child));
        } else {
            // Reproduction: exact copy, stored evaluation kept (identical
            // genes get identical fitness under the shared folds).
            next.push_back(pop.individuals[select_parent(pop, rng)]);
        }
    }
    pop.individuals = std::move(next);
}

bool material_improvement(double reference, double value) {
    const double threshold = 1e-9 * std::max(std::abs(reference), 1e-12);
    return (reference - value) > threshold;
}

void update_stagnation(Population& pop) {
    if (pop.best_fitness_history.empty()) {
        throw StructuralError("update_stagnation with empty fitness history");
    }
    for (std::size_t i = pop.history_consumed; i < pop.best_fitness_history.size(); ++i) {
        const double v = pop.best_fitness_history[i];
        if (!pop.has_stagnation_reference) {
            // The first observation is the baseline; it cannot improve on
            // anything, so it counts toward stagnation.
            pop.has_stagnation_reference = true;
            pop.stagnation_reference = v;
            pop.stagnation_counter += 1;
        } else if (material_improvement(pop.stagnation_reference, v)) {
            pop.stagnation_reference = v;
            pop.stagnation_counter = 0;
        } else {
            pop.stagnation_counter += 1;
        }
    }
    pop.history_consumed = pop.best_fitness_history.size();
}

void reset_stagnation(Population& pop) { pop.stagnation_counter = 0; }

}  // namespace digsp
