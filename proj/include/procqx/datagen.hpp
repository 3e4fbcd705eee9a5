#pragma once

#include "procqx/dataset.hpp"

#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

namespace procqx {

/// Diagonal Gaussian kernel in standardized feature space.
struct RbfKernel {
    std::vector<double> center;
    std::vector<double> width; // per-dimension stddev, floored at 0.05
    Label class_label = Label::Failed;
    double weight = 0.0; // fraction of the class's rows in this kernel's cluster
};

struct RbfGenerator {
    std::vector<RbfKernel> kernels;
    double prior_failed = 0.0;
    double prior_passed = 0.0;
    std::vector<std::pair<double, double>> feature_bounds; // seed min/max, original units
    StandardizationParams standardizer;
    std::vector<std::string> feature_names;
};

/// Learns per-class Gaussian kernels from seed data: k-means in standardized
/// space (20 restarts, up to 100 Lloyd iterations, seeded distinct-row
/// initialization), cluster means as centers, per-dimension population
/// stddevs as widths, cluster fractions as weights, empirical class
/// frequencies as priors. Deterministic for a fixed seed.
RbfGenerator fit_generator(const LabeledDataset& seed_data, std::size_t kernels_per_class,
                           std::uint64_t seed);

/// Draws n labeled rows: class by prior, kernel by weight, each dimension
/// from Normal(center, width), then de-standardized, clipped to the seed
/// bounds, with total_process_steps rounded to the nearest integer >= 1.
/// Deterministic for a fixed seed.
LabeledDataset sample_dataset(const RbfGenerator& gen, std::size_t n, std::uint64_t seed);

nlohmann::json generator_to_json(const RbfGenerator& gen);
RbfGenerator generator_from_json(const nlohmann::json& doc);

/// Built-in seed data for the demo pipeline: two well-separated process
/// profiles (Passed and Failed) over the canonical seven features.
LabeledDataset demo_seed_dataset(std::size_t rows_per_class, std::uint64_t seed);

} // namespace procqx
