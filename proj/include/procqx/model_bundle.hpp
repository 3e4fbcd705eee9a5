#pragma once

#include "procqx/dataset.hpp"
#include "procqx/explain.hpp"
#include "procqx/neural_net.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace procqx {

/// Everything needed to score new rows and to reproduce the training-time
/// splits: the network operates in standardized space, so the standardizer
/// travels with it.
struct ModelBundle {
    NetworkConfig config;
    Network net;
    StandardizationParams standardizer;
    std::vector<std::string> feature_names;
    TrainingHistory history;
    double threshold = 0.5;  // MCC-optimal on the validation split
    SplitRatios split_ratios;
    std::uint64_t split_seed = 0;

    void validate() const; // throws ValidationError on inconsistent shapes
};

/// Score one row given in original (unstandardized) units.
double predict_raw(const ModelBundle& bundle, const FeatureVector& row);

/// Infer-mode scores for a whole dataset in original units.
std::vector<double> predict_scores(const ModelBundle& bundle, const LabeledDataset& data);

/// Closure over a copy of the bundle, suitable for the explanation module.
Predictor make_predictor(const ModelBundle& bundle);

nlohmann::json bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const nlohmann::json& doc);

void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model(const std::string& path);

/// Per-round training history as CSV: `epoch,val_auroc,train_loss`.
void write_history_csv(std::ostream& out, const TrainingHistory& history);

} // namespace procqx
