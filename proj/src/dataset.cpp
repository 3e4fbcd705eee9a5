#include "procqx/dataset.hpp"

#include "procqx/csv.hpp"
#include "procqx/errors.hpp"
#include "procqx/numeric_io.hpp"
#include "procqx/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

namespace procqx {

std::string to_string(Label label) {
    return label == Label::Passed ? "Passed" : "Failed";
}

Label label_from_string(const std::string& text) {
    if (text == "Passed") return Label::Passed;
    if (text == "Failed") return Label::Failed;
    throw ValidationError("unknown quality label '" + text + "', expected Passed or Failed");
}

const std::vector<std::string>& process_feature_names() {
    static const std::vector<std::string> names = {
        "total_process_steps",
        "avg_duration_per_step_s",
        "avg_energy_per_step_kwh",
        "planned_setup_time_s",
        "planned_production_duration_s",
        "oee",
        "employee_productivity",
    };
    return names;
}

void LabeledDataset::validate() const {
    const std::size_t d = feature_names.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d) {
            throw ValidationError("dataset row " + std::to_string(i) + " has " +
                                  std::to_string(rows[i].size()) + " features, expected " +
                                  std::to_string(d));
        }
        for (double v : rows[i]) {
            if (!std::isfinite(v)) {
                throw ValidationError("dataset row " + std::to_string(i) + " contains a non-finite value");
            }
        }
    }
    if (labels && labels->size() != rows.size()) {
        throw ValidationError("label count (" + std::to_string(labels->size()) +
                              ") does not match row count (" + std::to_string(rows.size()) + ")");
    }
}

std::size_t LabeledDataset::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        if (feature_names[i] == name) return i;
    }
    throw ValidationError("unknown feature name '" + name + "'");
}

StandardizationParams fit_standardizer(const LabeledDataset& train) {
    if (train.rows.empty()) {
        throw ValidationError("cannot fit standardizer on an empty dataset");
    }
    const std::size_t d = train.dim();
    const double n = static_cast<double>(train.size());
    StandardizationParams p;
    p.mean.assign(d, 0.0);
    p.stddev.assign(d, 0.0);
    for (const auto& row : train.rows) {
        for (std::size_t j = 0; j < d; ++j) p.mean[j] += row[j];
    }
    for (std::size_t j = 0; j < d; ++j) p.mean[j] /= n;
    for (const auto& row : train.rows) {
        for (std::size_t j = 0; j < d; ++j) {
            const double dv = row[j] - p.mean[j];
            p.stddev[j] += dv * dv;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        p.stddev[j] = std::sqrt(p.stddev[j] / n);
        if (p.stddev[j] < 1e-12) p.stddev[j] = 1.0; // constant column
    }
    return p;
}

LabeledDataset apply_standardizer(const StandardizationParams& params, const LabeledDataset& data) {
    LabeledDataset out = data;
    for (auto& row : out.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = (row[j] - params.mean[j]) / params.stddev[j];
        }
    }
    return out;
}

LabeledDataset invert_standardizer(const StandardizationParams& params, const LabeledDataset& data) {
    LabeledDataset out = data;
    for (auto& row : out.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = row[j] * params.stddev[j] + params.mean[j];
        }
    }
    return out;
}

namespace {

// Largest-remainder rounding of n into three parts proportional to ratios.
std::array<std::size_t, 3> allocate_counts(std::size_t n, const SplitRatios& ratios) {
    const std::array<double, 3> r{ratios.train, ratios.valid, ratios.test};
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = r[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainder[i] = exact - std::floor(exact);
        assigned += counts[i];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (remainder[i] > remainder[best]) best = i;
        }
        counts[best]++;
        remainder[best] = -1.0;
        ++assigned;
    }
    return counts;
}

LabeledDataset take_rows(const LabeledDataset& data, const std::vector<std::size_t>& idx) {
    LabeledDataset out;
    out.feature_names = data.feature_names;
    out.rows.reserve(idx.size());
    std::vector<Label> labels;
    labels.reserve(idx.size());
    for (std::size_t i : idx) {
        out.rows.push_back(data.rows[i]);
        labels.push_back((*data.labels)[i]);
    }
    out.labels = std::move(labels);
    return out;
}

} // namespace

DatasetSplit stratified_split(const LabeledDataset& data, const SplitRatios& ratios,
                              std::uint64_t seed) {
    data.validate();
    if (!data.labeled()) {
        throw ValidationError("stratified_split requires a labeled dataset");
    }
    if (!(ratios.train > 0.0) || !(ratios.valid > 0.0) || !(ratios.test > 0.0) ||
        std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
        throw ValidationError("split ratios must be positive and sum to 1");
    }

    std::map<Label, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[(*data.labels)[i]].push_back(i);
    }
    for (const auto& [label, idx] : by_class) {
        if (idx.size() < 3) {
            throw ValidationError("class " + to_string(label) + " has only " +
                                  std::to_string(idx.size()) + " rows, need at least 3");
        }
    }

    Rng rng(derive_seed(seed, 17));
    std::array<std::vector<std::size_t>, 3> split_idx;
    for (auto& [label, idx] : by_class) {
        rng.shuffle(idx);
        const auto counts = allocate_counts(idx.size(), ratios);
        std::size_t pos = 0;
        for (int s = 0; s < 3; ++s) {
            for (std::size_t k = 0; k < counts[s]; ++k) {
                split_idx[s].push_back(idx[pos++]);
            }
        }
    }
    for (auto& idx : split_idx) std::sort(idx.begin(), idx.end());

    return DatasetSplit{take_rows(data, split_idx[0]), take_rows(data, split_idx[1]),
                        take_rows(data, split_idx[2])};
}

LabeledDataset read_dataset_csv(std::istream& in, const std::string& source_name) {
    const CsvTable table = read_csv(in, source_name);
    const auto& names = process_feature_names();
    bool with_label = false;
    if (table.header.size() == names.size() + 1 && table.header.back() == "label") {
        with_label = true;
    }
    std::vector<std::string> expected = names;
    if (with_label) expected.push_back("label");
    require_header(table, expected, source_name);

    LabeledDataset data;
    data.feature_names = names;
    if (with_label) data.labels.emplace();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& fields = table.rows[r];
        const std::string where = source_name + " line " + std::to_string(table.line_numbers[r]);
        FeatureVector row(names.size());
        for (std::size_t j = 0; j < names.size(); ++j) {
            row[j] = parse_double(fields[j], where + " column " + names[j]);
        }
        data.rows.push_back(std::move(row));
        if (with_label) data.labels->push_back(label_from_string(fields.back()));
    }
    data.validate();
    return data;
}

void write_dataset_csv(const LabeledDataset& data, std::ostream& out) {
    std::vector<std::string> header = data.feature_names;
    if (data.labeled()) header.push_back("label");
    write_csv_row(out, header);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<std::string> fields;
        fields.reserve(header.size());
        for (double v : data.rows[i]) fields.push_back(format_double(v));
        if (data.labeled()) fields.push_back(to_string((*data.labels)[i]));
        write_csv_row(out, fields);
    }
}

} // namespace procqx
