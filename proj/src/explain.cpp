#include "procqx/explain.hpp"

#include "procqx/errors.hpp"
#include "procqx/numeric_io.hpp"
#include "procqx/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace procqx {

namespace {

void check_background(const FeatureVector& instance, const LabeledDataset& background) {
    if (background.size() == 0) {
        throw ValidationError("explanation background set is empty");
    }
    if (background.dim() != instance.size()) {
        throw ValidationError("instance has " + std::to_string(instance.size()) +
                              " features but background rows have " +
                              std::to_string(background.dim()));
    }
}

double mean_prediction(const Predictor& predict, const LabeledDataset& data) {
    double sum = 0.0;
    for (const auto& row : data.rows) sum += predict(row);
    return sum / static_cast<double>(data.size());
}

} // namespace

ShapleyExplanation exact_shapley(const Predictor& predict, const FeatureVector& instance,
                                 const LabeledDataset& background) {
    check_background(instance, background);
    const std::size_t n = instance.size();
    if (n > 15) {
        throw ValidationError("exact Shapley enumerates 2^n subsets; " + std::to_string(n) +
                              " features is too many (limit 15)");
    }

    // v[mask] = mean over background rows of predict(instance on mask, row elsewhere).
    const std::size_t n_masks = std::size_t{1} << n;
    std::vector<double> v(n_masks, 0.0);
    FeatureVector composite(n);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        double sum = 0.0;
        for (const auto& row : background.rows) {
            for (std::size_t j = 0; j < n; ++j) {
                composite[j] = (mask >> j) & 1 ? instance[j] : row[j];
            }
            sum += predict(composite);
        }
        v[mask] = sum / static_cast<double>(background.size());
    }

    // 15! < 2^53, so factorials are exact in double.
    std::vector<double> fact(n + 1, 1.0);
    for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

    ShapleyExplanation exp;
    exp.instance = instance;
    exp.base_value = v[0];
    exp.prediction = predict(instance);
    exp.contributions.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        double phi = 0.0;
        for (std::size_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            const std::size_t s = static_cast<std::size_t>(std::popcount(mask));
            const double weight = fact[s] * fact[n - s - 1] / fact[n];
            phi += weight * (v[mask | bit] - v[mask]);
        }
        exp.contributions[j] = phi;
    }
    return exp;
}

ShapleyExplanation mc_shapley(const Predictor& predict, const FeatureVector& instance,
                              const LabeledDataset& background, std::size_t samples,
                              std::uint64_t seed) {
    check_background(instance, background);
    if (samples == 0) throw ValidationError("mc_shapley needs at least one sample");
    const std::size_t n = instance.size();

    // Per sample: one feature permutation, one background row; walking the
    // permutation and flipping features to the instance's values telescopes so
    // the per-sample contributions sum exactly to f(x) - f(row).
    std::vector<std::vector<double>> draws(n, std::vector<double>(samples, 0.0));
    Rng rng(seed);
    FeatureVector composite(n);
    for (std::size_t s = 0; s < samples; ++s) {
        const std::vector<std::size_t> order = rng.permutation(n);
        const std::size_t row_idx = static_cast<std::size_t>(rng.below(background.size()));
        composite = background.rows[row_idx];
        double prev = predict(composite);
        for (std::size_t j : order) {
            composite[j] = instance[j];
            const double next = predict(composite);
            draws[j][s] = next - prev;
            prev = next;
        }
    }

    ShapleyExplanation exp;
    exp.instance = instance;
    exp.monte_carlo = true;
    exp.samples = samples;
    exp.seed = seed;
    exp.base_value = mean_prediction(predict, background);
    exp.prediction = predict(instance);
    exp.contributions.assign(n, 0.0);
    exp.std_errors.assign(n, 0.0);
    const double count = static_cast<double>(samples);
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (double d : draws[j]) sum += d;
        const double mean = sum / count;
        exp.contributions[j] = mean;
        if (samples > 1) {
            double sq = 0.0;
            for (double d : draws[j]) {
                const double dev = d - mean;
                sq += dev * dev;
            }
            exp.std_errors[j] = std::sqrt(sq / (count - 1.0)) / std::sqrt(count);
        }
    }
    return exp;
}

std::vector<double> build_grid(const LabeledDataset& data, std::size_t feature_index,
                               std::size_t points) {
    if (data.size() == 0) throw ValidationError("cannot build a grid over an empty dataset");
    if (feature_index >= data.dim()) {
        throw ValidationError("grid feature index " + std::to_string(feature_index) +
                              " out of range");
    }
    if (points < 2) throw ValidationError("grid needs at least two points");

    double lo = data.rows.front()[feature_index];
    double hi = lo;
    for (const auto& row : data.rows) {
        lo = std::min(lo, row[feature_index]);
        hi = std::max(hi, row[feature_index]);
    }
    if (lo == hi) return {lo};  // constant feature: single-point grid

    std::vector<double> grid(points);
    const double span = hi - lo;
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = lo + span * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

IceCurve ice_curve(const Predictor& predict, const FeatureVector& instance,
                   std::size_t feature_index, const std::vector<double>& grid) {
    if (feature_index >= instance.size()) {
        throw ValidationError("ICE feature index " + std::to_string(feature_index) +
                              " out of range");
    }
    if (grid.empty()) throw ValidationError("ICE grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw ValidationError("ICE grid must be strictly increasing");
        }
    }

    IceCurve curve;
    curve.instance = instance;
    curve.feature_index = feature_index;
    curve.grid = grid;
    curve.scores.reserve(grid.size());
    FeatureVector probe = instance;
    for (double g : grid) {
        probe[feature_index] = g;
        curve.scores.push_back(predict(probe));
    }
    return curve;
}

PdpCurve pdp_curve(const Predictor& predict, const LabeledDataset& data,
                   std::size_t feature_index, const std::vector<double>& grid) {
    if (data.size() == 0) throw ValidationError("PDP needs a nonempty dataset");

    PdpCurve pdp;
    pdp.feature_index = feature_index;
    pdp.grid = grid;
    pdp.mean_scores.assign(grid.size(), 0.0);
    for (const auto& row : data.rows) {
        const IceCurve ice = ice_curve(predict, row, feature_index, grid);
        for (std::size_t g = 0; g < grid.size(); ++g) pdp.mean_scores[g] += ice.scores[g];
    }
    const double n = static_cast<double>(data.size());
    for (double& s : pdp.mean_scores) s /= n;
    return pdp;
}

GlobalShapSummary shap_global_summary(const std::vector<ShapleyExplanation>& explanations) {
    if (explanations.empty()) {
        throw ValidationError("global summary needs at least one explanation");
    }
    const std::size_t n = explanations.front().contributions.size();
    GlobalShapSummary summary;
    summary.importance.assign(n, 0.0);
    summary.dependence.assign(n, {});
    for (const auto& exp : explanations) {
        if (exp.contributions.size() != n || exp.instance.size() != n) {
            throw ValidationError("explanations mix feature counts; cannot aggregate");
        }
        summary.contributions.push_back(exp.contributions);
        for (std::size_t j = 0; j < n; ++j) {
            summary.importance[j] += std::abs(exp.contributions[j]);
            summary.dependence[j].emplace_back(exp.instance[j], exp.contributions[j]);
        }
    }
    for (double& imp : summary.importance) {
        imp /= static_cast<double>(explanations.size());
    }
    return summary;
}

void write_shapley_json(std::ostream& out, const ShapleyExplanation& exp,
                        const std::vector<std::string>& feature_names) {
    if (feature_names.size() != exp.contributions.size()) {
        throw ValidationError("feature name count does not match contribution count");
    }
    nlohmann::json doc;
    doc["format"] = "procqx-explanation";
    doc["version"] = 1;
    doc["instance"] = exp.instance;
    doc["prediction"] = exp.prediction;
    doc["base_value"] = exp.base_value;
    if (exp.monte_carlo) {
        doc["method"] = "monte_carlo";
        doc["samples"] = exp.samples;
        doc["seed"] = exp.seed;
    } else {
        doc["method"] = "exact";
    }
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t j = 0; j < exp.contributions.size(); ++j) {
        nlohmann::json f = {{"name", feature_names[j]},
                            {"value", exp.instance[j]},
                            {"phi", exp.contributions[j]}};
        if (exp.monte_carlo) f["stderr"] = exp.std_errors[j];
        features.push_back(std::move(f));
    }
    doc["features"] = std::move(features);
    out << doc.dump(2) << '\n';
}

ShapleyExplanation read_shapley_json(std::istream& in, std::vector<std::string>* feature_names) {
    try {
        const nlohmann::json doc = nlohmann::json::parse(in);
        if (doc.at("format") != "procqx-explanation" || doc.at("version") != 1) {
            throw ValidationError("unsupported explanation file format/version");
        }
        ShapleyExplanation exp;
        exp.instance = doc.at("instance").get<FeatureVector>();
        exp.prediction = doc.at("prediction").get<double>();
        exp.base_value = doc.at("base_value").get<double>();
        exp.monte_carlo = doc.at("method") == "monte_carlo";
        if (exp.monte_carlo) {
            exp.samples = doc.at("samples").get<std::size_t>();
            exp.seed = doc.at("seed").get<std::uint64_t>();
        }
        if (feature_names) feature_names->clear();
        for (const auto& f : doc.at("features")) {
            exp.contributions.push_back(f.at("phi").get<double>());
            if (exp.monte_carlo) exp.std_errors.push_back(f.at("stderr").get<double>());
            if (feature_names) feature_names->push_back(f.at("name").get<std::string>());
        }
        if (exp.contributions.size() != exp.instance.size()) {
            throw ValidationError("explanation feature list does not match the instance");
        }
        return exp;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed explanation JSON: ") + e.what());
    }
}

namespace {

void write_curve_rows(std::ostream& out, const std::vector<double>& grid,
                      const std::vector<double>& scores) {
    out << "grid_value,score\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << format_double(grid[i]) << ',' << format_double(scores[i]) << '\n';
    }
}

} // namespace

void write_ice_csv(std::ostream& out, const IceCurve& curve, const std::string& feature_name) {
    out << "# curve: ice\n";
    out << "# feature_name: " << feature_name << '\n';
    out << "# feature_index: " << curve.feature_index << '\n';
    out << "# observed_value: " << format_double(curve.observed_value()) << '\n';
    write_curve_rows(out, curve.grid, curve.scores);
}

void write_pdp_csv(std::ostream& out, const PdpCurve& curve, const std::string& feature_name) {
    out << "# curve: pdp\n";
    out << "# feature_name: " << feature_name << '\n';
    out << "# feature_index: " << curve.feature_index << '\n';
    write_curve_rows(out, curve.grid, curve.mean_scores);
}

CurveFile read_curve_file(std::istream& in) {
    CurveFile file;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string key = line.substr(1, colon - 1);
            std::string value = line.substr(colon + 1);
            const auto trim = [](std::string& s) {
                const auto b = s.find_first_not_of(' ');
                const auto e = s.find_last_not_of(' ');
                s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
            };
            trim(key);
            trim(value);
            if (key == "curve") file.kind = value;
            else if (key == "feature_name") file.feature_name = value;
            else if (key == "feature_index") file.feature_index = static_cast<std::size_t>(parse_int(value, "feature_index"));
            else if (key == "observed_value") file.observed_value = parse_double(value, "observed_value");
            continue;
        }
        if (!header_seen) {
            if (line != "grid_value,score") {
                throw ValidationError("curve CSV header must be `grid_value,score`, got `" + line + "`");
            }
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ValidationError("curve CSV row missing comma: `" + line + "`");
        }
        file.grid.push_back(parse_double(line.substr(0, comma), "grid_value"));
        file.scores.push_back(parse_double(line.substr(comma + 1), "score"));
    }
    if (!header_seen) throw ValidationError("curve CSV has no `grid_value,score` header");
    if (file.kind != "ice" && file.kind != "pdp") {
        throw ValidationError("curve CSV metadata must name the curve kind (ice or pdp)");
    }
    return file;
}

} // namespace procqx
