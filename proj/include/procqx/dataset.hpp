#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace procqx {

enum class Label : int { Failed = 0, Passed = 1 };

std::string to_string(Label label);
Label label_from_string(const std::string& text); // throws ValidationError

/// The fixed process-feature schema, in column order.
inline constexpr std::size_t kFeatureCount = 7;
const std::vector<std::string>& process_feature_names();

using FeatureVector = std::vector<double>;

struct LabeledDataset {
    std::vector<FeatureVector> rows;
    std::optional<std::vector<Label>> labels;
    std::vector<std::string> feature_names;

    std::size_t size() const { return rows.size(); }
    std::size_t dim() const { return rows.empty() ? feature_names.size() : rows.front().size(); }
    bool labeled() const { return labels.has_value(); }

    /// Checks rectangular shape, finite values, and label/row length match.
    void validate() const;

    std::size_t feature_index(const std::string& name) const; // throws if absent
};

struct StandardizationParams {
    std::vector<double> mean;
    std::vector<double> stddev; // all > 0; constant columns replaced by 1
};

/// Population (divide-by-n) moments over the training split. Columns whose
/// stddev falls below 1e-12 get stddev 1 so the transform stays invertible.
StandardizationParams fit_standardizer(const LabeledDataset& train);
LabeledDataset apply_standardizer(const StandardizationParams& params, const LabeledDataset& data);
LabeledDataset invert_standardizer(const StandardizationParams& params, const LabeledDataset& data);

struct SplitRatios {
    double train = 0.6;
    double valid = 0.2;
    double test = 0.2;
};

struct DatasetSplit {
    LabeledDataset train;
    LabeledDataset valid;
    LabeledDataset test;
};

/// Per-class largest-remainder allocation after a seeded shuffle, so each
/// split's class mix stays within one row of the global mix. Deterministic
/// for a fixed seed.
DatasetSplit stratified_split(const LabeledDataset& data, const SplitRatios& ratios,
                              std::uint64_t seed);

/// Dataset CSV: the seven feature columns in schema order plus an optional
/// trailing `label` column.
LabeledDataset read_dataset_csv(std::istream& in, const std::string& source_name);
void write_dataset_csv(const LabeledDataset& data, std::ostream& out);

} // namespace procqx
