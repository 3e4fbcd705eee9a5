#include "procqx/datagen.hpp"

#include "procqx/errors.hpp"
#include "procqx/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace procqx {

namespace {

constexpr double kWidthFloor = 0.05; // standardized units

struct KmeansResult {
    std::vector<std::vector<double>> centers;
    std::vector<std::size_t> assignment;
    double inertia = 0.0;
};

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

KmeansResult lloyd(const std::vector<std::vector<double>>& points,
                   std::vector<std::vector<double>> centers, std::size_t max_iters) {
    const std::size_t k = centers.size();
    const std::size_t d = points.front().size();
    KmeansResult res;
    res.assignment.assign(points.size(), 0);

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double dist = sq_dist(points[i], centers[c]);
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            if (res.assignment[i] != best) {
                res.assignment[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::size_t c = res.assignment[i];
            ++counts[c];
            for (std::size_t j = 0; j < d; ++j) sums[c][j] += points[i][j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // re-seed an emptied cluster on the point farthest from its center
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    const double dist = sq_dist(points[i], centers[res.assignment[i]]);
                    if (dist > far_d) {
                        far_d = dist;
                        far = i;
                    }
                }
                centers[c] = points[far];
            } else {
                for (std::size_t j = 0; j < d; ++j) {
                    centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
                }
            }
        }
    }

    res.centers = std::move(centers);
    for (std::size_t i = 0; i < points.size(); ++i) {
        res.inertia += sq_dist(points[i], res.centers[res.assignment[i]]);
    }
    return res;
}

KmeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, Rng& rng) {
    constexpr std::size_t kRestarts = 20;
    constexpr std::size_t kMaxIters = 100;
    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t restart = 0; restart < kRestarts; ++restart) {
        const auto idx = rng.sample_distinct(points.size(), k);
        std::vector<std::vector<double>> centers;
        centers.reserve(k);
        for (std::size_t i : idx) centers.push_back(points[i]);
        KmeansResult run = lloyd(points, std::move(centers), kMaxIters);
        if (run.inertia < best.inertia) {
            best = std::move(run);
        }
    }
    return best;
}

} // namespace

RbfGenerator fit_generator(const LabeledDataset& seed_data, std::size_t kernels_per_class,
                           std::uint64_t seed) {
    seed_data.validate();
    if (!seed_data.labeled()) {
        throw ValidationError("fit_generator requires labeled seed data");
    }
    if (kernels_per_class == 0) {
        throw ValidationError("kernels_per_class must be positive");
    }
    const std::size_t d = seed_data.dim();

    RbfGenerator gen;
    gen.feature_names = seed_data.feature_names;
    gen.standardizer = fit_standardizer(seed_data);
    const LabeledDataset std_data = apply_standardizer(gen.standardizer, seed_data);

    gen.feature_bounds.assign(d, {std::numeric_limits<double>::infinity(),
                                  -std::numeric_limits<double>::infinity()});
    for (const auto& row : seed_data.rows) {
        for (std::size_t j = 0; j < d; ++j) {
            gen.feature_bounds[j].first = std::min(gen.feature_bounds[j].first, row[j]);
            gen.feature_bounds[j].second = std::max(gen.feature_bounds[j].second, row[j]);
        }
    }

    std::map<Label, std::vector<std::vector<double>>> by_class;
    for (std::size_t i = 0; i < std_data.size(); ++i) {
        by_class[(*std_data.labels)[i]].push_back(std_data.rows[i]);
    }
    for (const auto& [label, rows] : by_class) {
        if (rows.size() < kernels_per_class) {
            throw ValidationError("class " + to_string(label) + " has " +
                                  std::to_string(rows.size()) + " rows, fewer than kernels_per_class (" +
                                  std::to_string(kernels_per_class) + ")");
        }
    }

    const double n_total = static_cast<double>(seed_data.size());
    Rng rng(derive_seed(seed, 29));
    for (const auto& [label, rows] : by_class) {
        const double prior = static_cast<double>(rows.size()) / n_total;
        (label == Label::Passed ? gen.prior_passed : gen.prior_failed) = prior;

        const KmeansResult km = kmeans(rows, kernels_per_class, rng);
        for (std::size_t c = 0; c < kernels_per_class; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (km.assignment[i] == c) members.push_back(i);
            }
            RbfKernel kernel;
            kernel.class_label = label;
            kernel.weight = static_cast<double>(members.size()) / static_cast<double>(rows.size());
            kernel.center = km.centers[c];
            kernel.width.assign(d, 0.0);
            for (std::size_t i : members) {
                for (std::size_t j = 0; j < d; ++j) {
                    const double dv = rows[i][j] - kernel.center[j];
                    kernel.width[j] += dv * dv;
                }
            }
            for (std::size_t j = 0; j < d; ++j) {
                const double var = members.empty()
                                       ? 0.0
                                       : kernel.width[j] / static_cast<double>(members.size());
                kernel.width[j] = std::max(std::sqrt(var), kWidthFloor);
            }
            if (!members.empty()) {
                gen.kernels.push_back(std::move(kernel));
            }
        }
    }
    return gen;
}

LabeledDataset sample_dataset(const RbfGenerator& gen, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ValidationError("sample_dataset: n must be positive");
    if (gen.kernels.empty()) throw ValidationError("generator has no kernels");
    const std::size_t d = gen.feature_names.size();

    std::ptrdiff_t steps_index = -1;
    for (std::size_t j = 0; j < d; ++j) {
        if (gen.feature_names[j] == "total_process_steps") steps_index = static_cast<std::ptrdiff_t>(j);
    }

    LabeledDataset out;
    out.feature_names = gen.feature_names;
    out.labels.emplace();
    Rng rng(derive_seed(seed, 31));
    for (std::size_t i = 0; i < n; ++i) {
        const Label label = rng.uniform01() < gen.prior_failed ? Label::Failed : Label::Passed;

        double pick = rng.uniform01();
        const RbfKernel* kernel = nullptr;
        for (const auto& k : gen.kernels) {
            if (k.class_label != label) continue;
            kernel = &k;
            pick -= k.weight;
            if (pick < 0.0) break;
        }
        if (!kernel) {
            throw ValidationError("generator has no kernels for class " + to_string(label));
        }

        FeatureVector row(d);
        for (std::size_t j = 0; j < d; ++j) {
            const double z = rng.normal(kernel->center[j], kernel->width[j]);
            double v = z * gen.standardizer.stddev[j] + gen.standardizer.mean[j];
            v = std::clamp(v, gen.feature_bounds[j].first, gen.feature_bounds[j].second);
            if (static_cast<std::ptrdiff_t>(j) == steps_index) {
                v = std::max(1.0, std::round(v));
                v = std::clamp(v, gen.feature_bounds[j].first, gen.feature_bounds[j].second);
                v = std::max(1.0, v);
            }
            row[j] = v;
        }
        out.rows.push_back(std::move(row));
        out.labels->push_back(label);
    }
    return out;
}

nlohmann::json generator_to_json(const RbfGenerator& gen) {
    nlohmann::json doc;
    doc["format"] = "procqx-generator";
    doc["version"] = 1;
    doc["feature_names"] = gen.feature_names;
    doc["priors"] = {{"Failed", gen.prior_failed}, {"Passed", gen.prior_passed}};
    nlohmann::json kernels = nlohmann::json::array();
    for (const auto& k : gen.kernels) {
        kernels.push_back({{"center", k.center},
                           {"width", k.width},
                           {"class", to_string(k.class_label)},
                           {"weight", k.weight}});
    }
    doc["kernels"] = std::move(kernels);
    nlohmann::json bounds = nlohmann::json::array();
    for (const auto& [lo, hi] : gen.feature_bounds) {
        bounds.push_back({lo, hi});
    }
    doc["feature_bounds"] = std::move(bounds);
    doc["standardizer"] = {{"mean", gen.standardizer.mean}, {"stddev", gen.standardizer.stddev}};
    return doc;
}

RbfGenerator generator_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "procqx-generator" || doc.at("version") != 1) {
            throw ValidationError("unsupported generator file format/version");
        }
        RbfGenerator gen;
        gen.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        gen.prior_failed = doc.at("priors").at("Failed").get<double>();
        gen.prior_passed = doc.at("priors").at("Passed").get<double>();
        for (const auto& k : doc.at("kernels")) {
            RbfKernel kernel;
            kernel.center = k.at("center").get<std::vector<double>>();
            kernel.width = k.at("width").get<std::vector<double>>();
            kernel.class_label = label_from_string(k.at("class").get<std::string>());
            kernel.weight = k.at("weight").get<double>();
            if (kernel.center.size() != gen.feature_names.size() ||
                kernel.width.size() != gen.feature_names.size()) {
                throw ValidationError("generator kernel dimension mismatch");
            }
            gen.kernels.push_back(std::move(kernel));
        }
        for (const auto& b : doc.at("feature_bounds")) {
            gen.feature_bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
        }
        gen.standardizer.mean = doc.at("standardizer").at("mean").get<std::vector<double>>();
        gen.standardizer.stddev = doc.at("standardizer").at("stddev").get<std::vector<double>>();
        if (gen.feature_bounds.size() != gen.feature_names.size() ||
            gen.standardizer.mean.size() != gen.feature_names.size() ||
            gen.standardizer.stddev.size() != gen.feature_names.size()) {
            throw ValidationError("generator field dimension mismatch");
        }
        return gen;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed generator JSON: ") + e.what());
    }
}

LabeledDataset demo_seed_dataset(std::size_t rows_per_class, std::uint64_t seed) {
    if (rows_per_class == 0) throw ValidationError("demo seed needs at least one row per class");

    // Two process profiles: healthy runs pass inspection, degraded runs fail.
    struct Profile {
        Label label;
        double steps_mu, steps_sd;
        double dur_mu, dur_sd;       // s per step
        double energy_mu, energy_sd; // kWh per step
        double setup_mu, setup_sd;   // s
        double prod_mu, prod_sd;     // s
        double oee_mu, oee_sd;
        double prodty_mu, prodty_sd;
    };
    const Profile profiles[2] = {
        {Label::Passed, 8.0, 2.0, 1500.0, 250.0, 5.0, 0.9, 1800.0, 250.0, 12000.0, 1800.0, 0.85,
         0.05, 0.80, 0.06},
        {Label::Failed, 14.0, 3.0, 2400.0, 300.0, 8.5, 1.1, 2600.0, 350.0, 17000.0, 2200.0, 0.45,
         0.07, 0.50, 0.08},
    };

    LabeledDataset data;
    data.feature_names = process_feature_names();
    data.labels.emplace();
    Rng rng(derive_seed(seed, 37));
    for (std::size_t i = 0; i < rows_per_class; ++i) {
        for (const auto& p : profiles) {
            FeatureVector row(kFeatureCount);
            row[0] = std::max(1.0, std::round(rng.normal(p.steps_mu, p.steps_sd)));
            row[1] = std::max(1.0, rng.normal(p.dur_mu, p.dur_sd));
            row[2] = std::max(0.1, rng.normal(p.energy_mu, p.energy_sd));
            row[3] = std::max(0.0, rng.normal(p.setup_mu, p.setup_sd));
            row[4] = std::max(0.0, rng.normal(p.prod_mu, p.prod_sd));
            row[5] = std::clamp(rng.normal(p.oee_mu, p.oee_sd), 0.01, 0.99);
            row[6] = std::clamp(rng.normal(p.prodty_mu, p.prodty_sd), 0.01, 0.99);
            data.rows.push_back(std::move(row));
            data.labels->push_back(p.label);
        }
    }
    return data;
}

} // namespace procqx
