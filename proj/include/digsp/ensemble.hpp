#pragma once

#include <span>
#include <string>
#include <vector>

#include "digsp/evolution.hpp"

namespace digsp {

/// Snapshot of one population's contribution to the ensemble.
struct EnsembleMember {
    std::string population_id;
    Individual individual;  // immutable copy, evaluation included
};

/// Cross-population fusion: each member's own fused prediction becomes one
/// column of a second elastic-net fit.
struct EnsembleModel {
    std::vector<EnsembleMember> members;
    LinearFit fusion;
    double train_rmse = 0.0;
    double val_rmse = 0.0;
};

/// Takes the top_m best individuals of every population (all available when a
/// population is smaller), fits the fusion weights on the training split and
/// records train/val RMSE. Populations must be evaluated.
EnsembleModel build_ensemble(const std::vector<Population>& pops, int top_m,
                             std::span<const std::vector<double>> train_rows,
                             std::span<const double> y_train,
                             std::span<const std::vector<double>> val_rows,
                             std::span<const double> y_val,
                             double lambda1, double lambda2,
                             const AbstractionRegistry* registry);

/// The scalar that drives global stagnation and final-model selection:
/// validation RMSE.
double ensemble_fitness(const EnsembleModel& model);

/// Fused prediction on raw feature rows (each member evaluates its own genes
/// on them). Throws InputError when a row does not carry the full schema.
std::vector<double> predict_full(const EnsembleModel& model,
                                 std::span<const std::vector<double>> rows,
                                 const AbstractionRegistry* registry);

}  // namespace digsp
