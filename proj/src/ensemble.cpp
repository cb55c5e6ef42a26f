#include "digsp/ensemble.hpp"

#include <algorithm>

#include "digsp/data.hpp"
#include "digsp/errors.hpp"

namespace digsp {

namespace {

std::vector<std::vector<double>> member_columns(const EnsembleModel& model,
                                                std::span<const std::vector<double>> rows,
                                                const AbstractionRegistry* registry) {
    std::vector<std::vector<double>> cols;
    cols.reserve(model.members.size());
    for (const auto& m : model.members) {
        cols.push_back(individual_predict(m.individual, rows, registry));
    }
    return cols;
}

}  // namespace

EnsembleModel build_ensemble(const std::vector<Population>& pops, int top_m,
                             std::span<const std::vector<double>> train_rows,
                             std::span<const double> y_train,
                             std::span<const std::vector<double>> val_rows,
                             std::span<const double> y_val,
                             double lambda1, double lambda2,
                             const AbstractionRegistry* registry) {
    if (pops.empty()) throw InputError("build_ensemble: no populations");
    if (top_m < 1) throw InputError("build_ensemble: top_m must be >= 1");

    EnsembleModel model;
    for (const auto& pop : pops) {
        std::vector<std::size_t> order(pop.individuals.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return individual_precedes(pop.individuals[a], a, pop.individuals[b], b);
        });
        const std::size_t take = std::min<std::size_t>(top_m, order.size());
        for (std::size_t r = 0; r < take; ++r) {
            model.members.push_back({pop.id, pop.individuals[order[r]]});
        }
    }

    const auto X_train = DesignMatrix::from_columns(member_columns(model, train_rows, registry));
    model.fusion = fit_elastic_net(X_train, y_train, lambda1, lambda2);
    model.train_rmse = model.fusion.train_rmse;

    const auto X_val = DesignMatrix::from_columns(member_columns(model, val_rows, registry));
    model.val_rmse = rmse(predict(model.fusion, X_val), y_val);
    return model;
}

double ensemble_fitness(const EnsembleModel& model) { return model.val_rmse; }

std::vector<double> predict_full(const EnsembleModel& model,
                                 std::span<const std::vector<double>> rows,
                                 const AbstractionRegistry* registry) {
    for (const auto& row : rows) {
        if (row.size() != kFeatureCount) {
            throw InputError("predict_full: row does not carry the full feature schema");
        }
    }
    const auto X = DesignMatrix::from_columns(member_columns(model, rows, registry));
    return predict(model.fusion, X);
}

}  // namespace digsp
