#pragma once

#include "procqx/dataset.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace procqx {

/// Black-box scoring function. Must be pure: explanation math assumes that the
/// same input always yields the same output.
using Predictor = std::function<double(const FeatureVector&)>;

/// Additive attribution of one prediction against a background dataset.
struct ShapleyExplanation {
    FeatureVector instance;
    double prediction = 0.0;
    double base_value = 0.0;  // mean prediction over the background rows
    std::vector<double> contributions;
    bool monte_carlo = false;
    std::size_t samples = 0;         // monte_carlo only
    std::uint64_t seed = 0;          // monte_carlo only
    std::vector<double> std_errors;  // monte_carlo only, parallel to contributions
};

/// Exact Shapley values by subset enumeration; cost grows as 2^d, refused for d > 15.
ShapleyExplanation exact_shapley(const Predictor& predict, const FeatureVector& instance,
                                 const LabeledDataset& background);

/// Permutation-sampling estimate with per-feature standard errors.
ShapleyExplanation mc_shapley(const Predictor& predict, const FeatureVector& instance,
                              const LabeledDataset& background, std::size_t samples,
                              std::uint64_t seed);

/// `points` equally spaced values spanning the feature's [min, max] over `data`,
/// endpoints inclusive. A constant feature collapses to a single-point grid.
std::vector<double> build_grid(const LabeledDataset& data, std::size_t feature_index,
                               std::size_t points);

/// Score curve for one instance with one feature swept across a grid.
struct IceCurve {
    FeatureVector instance;
    std::size_t feature_index = 0;
    std::vector<double> grid;
    std::vector<double> scores;

    double observed_value() const { return instance[feature_index]; }
};

IceCurve ice_curve(const Predictor& predict, const FeatureVector& instance,
                   std::size_t feature_index, const std::vector<double>& grid);

/// Pointwise mean of the per-row ICE curves over a dataset, on a shared grid.
struct PdpCurve {
    std::size_t feature_index = 0;
    std::vector<double> grid;
    std::vector<double> mean_scores;
};

PdpCurve pdp_curve(const Predictor& predict, const LabeledDataset& data,
                   std::size_t feature_index, const std::vector<double>& grid);

/// Aggregation of many local explanations into global importance.
struct GlobalShapSummary {
    std::vector<std::vector<double>> contributions;  // one row per explanation
    std::vector<double> importance;                  // mean |phi_j| per feature
    // per feature: (observed value, phi) pairs in explanation order
    std::vector<std::vector<std::pair<double, double>>> dependence;
};

GlobalShapSummary shap_global_summary(const std::vector<ShapleyExplanation>& explanations);

void write_shapley_json(std::ostream& out, const ShapleyExplanation& exp,
                        const std::vector<std::string>& feature_names);
ShapleyExplanation read_shapley_json(std::istream& in, std::vector<std::string>* feature_names = nullptr);

/// One ICE or PDP curve as stored on disk: `grid_value,score` rows preceded by
/// `#`-prefixed metadata lines.
struct CurveFile {
    std::string kind;  // "ice" or "pdp"
    std::string feature_name;
    std::size_t feature_index = 0;
    double observed_value = 0.0;  // ice only
    std::vector<double> grid;
    std::vector<double> scores;
};

void write_ice_csv(std::ostream& out, const IceCurve& curve, const std::string& feature_name);
void write_pdp_csv(std::ostream& out, const PdpCurve& curve, const std::string& feature_name);
CurveFile read_curve_file(std::istream& in);

} // namespace procqx
