#include "procqx/cli.hpp"

#include "procqx/datagen.hpp"
#include "procqx/dataset.hpp"
#include "procqx/errors.hpp"
#include "procqx/evaluation.hpp"
#include "procqx/event_log.hpp"
#include "procqx/explain.hpp"
#include "procqx/model_bundle.hpp"
#include "procqx/neural_net.hpp"
#include "procqx/numeric_io.hpp"
#include "procqx/rng.hpp"
#include "procqx/svg_charts.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace procqx {

namespace {

// seed-stream ids for the pipeline stages
constexpr std::uint64_t kSplitStream = 101;
constexpr std::uint64_t kBackgroundStream = 201;
constexpr std::uint64_t kMcStream = 211;

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open input file " + path);
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw ValidationError("failed writing " + path.string());
}

fs::path prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
    return fs::path(dir);
}

void write_text_file(const fs::path& path, const std::string& content) {
    auto out = open_output(path);
    out << content;
    finish_output(out, path);
}

void write_json_file(const fs::path& path, const nlohmann::json& doc) {
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
    finish_output(out, path);
}

nlohmann::json load_config_file(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    auto in = open_input(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config file " + path + " must hold a JSON object");

    static const std::vector<std::string> known = {
        "seed",    "rows",    "kernels_per_class", "seed_rows_per_class",
        "split",   "network", "samples",           "grid_points"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ValidationError("config field `" + key + "` is not recognized");
        }
        (void)value;
    }
    return doc;
}

template <typename T>
T config_number(const nlohmann::json& config, const std::string& key, T fallback) {
    if (!config.contains(key)) return fallback;
    try {
        return config.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("config field `" + key + "` has the wrong type");
    }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const nlohmann::json& config) {
    if (flag) return *flag;
    if (config.contains("seed")) return config_number<std::uint64_t>(config, "seed", 0);
    if (const char* env = std::getenv("PROCQX_SEED")) {
        return static_cast<std::uint64_t>(parse_int(env, "PROCQX_SEED"));
    }
    return 42;
}

SplitRatios split_from_config(const nlohmann::json& config) {
    SplitRatios ratios;
    if (!config.contains("split")) return ratios;
    const auto& split = config.at("split");
    if (!split.is_object()) throw ValidationError("config field `split` must be an object");
    for (const auto& [key, value] : split.items()) {
        double* target = nullptr;
        if (key == "train") target = &ratios.train;
        else if (key == "valid") target = &ratios.valid;
        else if (key == "test") target = &ratios.test;
        else throw ValidationError("config field `split." + key + "` is not recognized");
        if (!value.is_number()) {
            throw ValidationError("config field `split." + key + "` must be a number");
        }
        *target = value.get<double>();
    }
    return ratios;
}

NetworkConfig network_from_config(const nlohmann::json& config) {
    NetworkConfig net;
    if (!config.contains("network")) return net;
    const auto& doc = config.at("network");
    if (!doc.is_object()) throw ValidationError("config field `network` must be an object");
    const double default_dropout = net.hidden_dropout.empty() ? 0.5 : net.hidden_dropout.front();
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "hidden_sizes") net.hidden_sizes = value.get<std::vector<std::size_t>>();
            else if (key == "input_dropout") net.input_dropout = value.get<double>();
            else if (key == "hidden_dropout") net.hidden_dropout = value.get<std::vector<double>>();
            else if (key == "max_epochs") net.max_epochs = value.get<std::size_t>();
            else if (key == "rho") net.rho = value.get<double>();
            else if (key == "epsilon") net.epsilon = value.get<double>();
            else if (key == "max_w2") net.max_w2 = value.get<double>();
            else if (key == "stopping_rounds") net.stopping_rounds = value.get<std::size_t>();
            else if (key == "stopping_tolerance") net.stopping_tolerance = value.get<double>();
            else if (key == "minibatch_size") net.minibatch_size = value.get<std::size_t>();
            else throw ValidationError("config field `network." + key + "` is not recognized");
        } catch (const nlohmann::json::exception&) {
            throw ValidationError("config field `network." + key + "` has the wrong type");
        }
    }
    // Overriding the architecture alone should not trip the per-layer dropout
    // length check against the stale default list.
    if (doc.contains("hidden_sizes") && !doc.contains("hidden_dropout")) {
        net.hidden_dropout.assign(net.hidden_sizes.size(), default_dropout);
    }
    return net;
}

LabeledDataset load_dataset(const std::string& path) {
    auto in = open_input(path);
    return read_dataset_csv(in, path);
}

/// Keeps at most `cap` rows, chosen by seeded subsampling with the original
/// row order preserved.
LabeledDataset cap_rows(const LabeledDataset& data, std::size_t cap, std::uint64_t seed) {
    if (data.size() <= cap) return data;
    Rng rng(derive_seed(seed, kBackgroundStream));
    std::vector<std::size_t> idx = rng.sample_distinct(data.size(), cap);
    std::sort(idx.begin(), idx.end());
    LabeledDataset out;
    out.feature_names = data.feature_names;
    if (data.labels) out.labels.emplace();
    for (std::size_t i : idx) {
        out.rows.push_back(data.rows[i]);
        if (data.labels) out.labels->push_back((*data.labels)[i]);
    }
    return out;
}

// ---- subcommand bodies ----

struct GenerateOpts {
    std::string out_dir;
    std::string seed_dataset;   // optional: fit the generator to this CSV
    std::string generator_path; // optional: reuse a saved generator
    std::optional<std::size_t> rows;
    std::optional<std::size_t> kernels;
};

int cmd_generate(const GenerateOpts& opts, const nlohmann::json& config, std::uint64_t seed,
                 std::ostream& out) {
    const fs::path dir = prepare_out_dir(opts.out_dir);
    const std::size_t rows =
        opts.rows ? *opts.rows : config_number<std::size_t>(config, "rows", 5000);
    const std::size_t kernels =
        opts.kernels ? *opts.kernels : config_number<std::size_t>(config, "kernels_per_class", 5);

    RbfGenerator gen;
    if (!opts.generator_path.empty()) {
        auto in = open_input(opts.generator_path);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("generator file " + opts.generator_path +
                                  " is not valid JSON: " + e.what());
        }
        gen = generator_from_json(doc);
    } else {
        LabeledDataset seed_data;
        if (!opts.seed_dataset.empty()) {
            seed_data = load_dataset(opts.seed_dataset);
        } else {
            const std::size_t per_class =
                config_number<std::size_t>(config, "seed_rows_per_class", 400);
            seed_data = demo_seed_dataset(per_class, seed);
        }
        gen = fit_generator(seed_data, kernels, seed);
    }

    const LabeledDataset data = sample_dataset(gen, rows, seed);
    {
        auto csv = open_output(dir / "dataset.csv");
        write_dataset_csv(data, csv);
        finish_output(csv, dir / "dataset.csv");
    }
    write_json_file(dir / "generator.json", generator_to_json(gen));
    out << "wrote " << (dir / "dataset.csv").string() << " (" << data.size() << " rows) and "
        << (dir / "generator.json").string() << '\n';
    return 0;
}

struct ExtractOpts {
    std::string events_path;
    std::string cases_path;
    std::string out_dir;
};

int cmd_extract(const ExtractOpts& opts, std::ostream& out) {
    const fs::path dir = prepare_out_dir(opts.out_dir);
    auto events_in = open_input(opts.events_path);
    auto cases_in = open_input(opts.cases_path);
    const EventLog log = load_event_log(events_in, cases_in);
    const LabeledDataset data = extract_features(log);
    auto csv = open_output(dir / "dataset.csv");
    write_dataset_csv(data, csv);
    finish_output(csv, dir / "dataset.csv");
    out << "extracted " << data.size() << " cases into " << (dir / "dataset.csv").string() << '\n';
    return 0;
}

struct TrainOpts {
    std::string dataset_path;
    std::string out_dir;
};

int cmd_train(const TrainOpts& opts, const nlohmann::json& config, std::uint64_t seed,
              std::ostream& out) {
    const fs::path dir = prepare_out_dir(opts.out_dir);
    const LabeledDataset data = load_dataset(opts.dataset_path);
    if (!data.labeled()) throw ValidationError("training requires a labeled dataset");

    NetworkConfig net_config = network_from_config(config);
    net_config.input_dim = data.dim();
    net_config.seed = seed;
    net_config.validate();

    const SplitRatios ratios = split_from_config(config);
    const std::uint64_t split_seed = derive_seed(seed, kSplitStream);
    const DatasetSplit split = stratified_split(data, ratios, split_seed);

    const StandardizationParams standardizer = fit_standardizer(split.train);
    const LabeledDataset train_std = apply_standardizer(standardizer, split.train);
    const LabeledDataset valid_std = apply_standardizer(standardizer, split.valid);

    const TrainResult result = train(net_config, train_std, valid_std);

    const std::vector<double> valid_scores = predict(result.net, valid_std);
    const ThresholdSearch search = best_mcc_threshold(valid_scores, *split.valid.labels);

    ModelBundle bundle;
    bundle.config = net_config;
    bundle.net = result.net;
    bundle.standardizer = standardizer;
    bundle.feature_names = data.feature_names;
    bundle.history = result.history;
    bundle.threshold = search.threshold;
    bundle.split_ratios = ratios;
    bundle.split_seed = split_seed;
    save_model(bundle, (dir / "model.json").string());

    {
        auto csv = open_output(dir / "history.csv");
        write_history_csv(csv, result.history);
        finish_output(csv, dir / "history.csv");
    }

    out << "trained for " << result.history.rounds.size() << " epochs"
        << (result.history.stopped_early ? " (stopped early)" : "") << "; best epoch "
        << result.history.best_epoch << " with validation AUROC "
        << format_fixed(result.history.final_validation_auroc, 3) << "; decision threshold "
        << format_fixed(bundle.threshold, 3) << '\n';
    out << "wrote " << (dir / "model.json").string() << " and " << (dir / "history.csv").string()
        << '\n';
    return 0;
}

/// Rebuilds the bundle's training-time split of `data` and returns the part
/// named by `which` ("train" | "valid" | "test" | "all").
LabeledDataset select_split(const LabeledDataset& data, const ModelBundle& bundle,
                            const std::string& which) {
    if (which == "all") return data;
    if (!data.labeled()) {
        throw ValidationError("--split " + which + " needs a labeled dataset to rebuild the split");
    }
    const DatasetSplit split = stratified_split(data, bundle.split_ratios, bundle.split_seed);
    if (which == "train") return split.train;
    if (which == "valid") return split.valid;
    return split.test;
}

struct EvaluateOpts {
    std::string model_path;
    std::string dataset_path;
    std::string out_dir;
    std::string split = "test";
};

int cmd_evaluate(const EvaluateOpts& opts, std::ostream& out) {
    const fs::path dir = prepare_out_dir(opts.out_dir);
    const ModelBundle bundle = load_model(opts.model_path);
    const LabeledDataset data = load_dataset(opts.dataset_path);
    if (!data.labeled()) throw ValidationError("evaluation requires a labeled dataset");
    if (data.dim() != bundle.config.input_dim) {
        throw ValidationError("dataset and model disagree on the feature count");
    }

    const LabeledDataset part = select_split(data, bundle, opts.split);
    const std::vector<double> scores = predict_scores(bundle, part);
    const std::vector<Label>& labels = *part.labels;

    const RocResult roc = roc_auroc(scores, labels);
    const PrResult pr = pr_auprc(scores, labels);
    const ThresholdSearch search = best_mcc_threshold(scores, labels);
    const MetricsReport& m = search.report;

    nlohmann::json doc;
    doc["format"] = "procqx-metrics";
    doc["version"] = 1;
    doc["split"] = opts.split;
    doc["n"] = part.size();
    doc["auroc"] = roc.auroc;
    doc["auprc"] = pr.auprc;
    doc["threshold"] = search.threshold;
    doc["bundle_threshold"] = bundle.threshold;
    doc["measures"] = {{"f1", m.f1},
                       {"accuracy", m.accuracy},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"specificity", m.specificity},
                       {"mcc_abs", m.mcc_abs},
                       {"fnr", m.fnr},
                       {"fpr", m.fpr}};
    doc["confusion"] = {{"tp", m.confusion.tp},
                        {"tn", m.confusion.tn},
                        {"fp", m.confusion.fp},
                        {"fn", m.confusion.fn}};
    doc["degenerate"] = m.degenerate;
    write_json_file(dir / "metrics.json", doc);

    {
        auto csv = open_output(dir / "roc.csv");
        write_curve_csv(roc.curve, csv);
        finish_output(csv, dir / "roc.csv");
    }
    {
        auto csv = open_output(dir / "pr.csv");
        write_curve_csv(pr.curve, csv);
        finish_output(csv, dir / "pr.csv");
    }

    out << "split " << opts.split << " (" << part.size() << " rows): AUROC "
        << format_fixed(roc.auroc, 3) << ", AUPRC " << format_fixed(pr.auprc, 3)
        << ", best-MCC threshold " << format_fixed(search.threshold, 3) << " (|MCC| "
        << format_fixed(m.mcc_abs, 3) << ")\n";
    out << "wrote metrics.json, roc.csv, pr.csv under " << dir.string() << '\n';
    return 0;
}

struct ExplainOpts {
    std::string model_path;
    std::string dataset_path;
    std::string out_dir;
    std::optional<std::size_t> instance;
    std::string pick;
    std::size_t samples = 0; // 0 = exact enumeration
    std::size_t grid_points = 30;
};

std::size_t pick_instance(const std::string& category, const ModelBundle& bundle,
                          const LabeledDataset& data, const std::vector<double>& scores) {
    if (!data.labeled()) {
        throw ValidationError("--pick needs labels to locate a " + category + " instance");
    }
    const bool want_predicted_pass = category == "tp" || category == "fp";
    const bool want_actual_pass = category == "tp" || category == "fn";
    std::optional<std::size_t> best;
    double best_confidence = -1.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool predicted_pass = scores[i] >= bundle.threshold;
        const bool actual_pass = (*data.labels)[i] == Label::Passed;
        if (predicted_pass != want_predicted_pass || actual_pass != want_actual_pass) continue;
        const double confidence = predicted_pass ? scores[i] : 1.0 - scores[i];
        if (confidence > best_confidence) {
            best_confidence = confidence;
            best = i;
        }
    }
    if (!best) {
        throw ValidationError("no " + category + " instance at threshold " +
                              format_double(bundle.threshold));
    }
    return *best;
}

int cmd_explain(const ExplainOpts& opts, std::uint64_t seed, std::ostream& out) {
    const fs::path dir = prepare_out_dir(opts.out_dir);
    const ModelBundle bundle = load_model(opts.model_path);
    const LabeledDataset data = load_dataset(opts.dataset_path);
    if (data.size() == 0) throw ValidationError("dataset has no rows to explain");
    if (data.dim() != bundle.config.input_dim) {
        throw ValidationError("dataset and model disagree on the feature count");
    }
    const Predictor predictor = make_predictor(bundle);

    std::size_t row_index = 0;
    if (!opts.pick.empty()) {
        row_index = pick_instance(opts.pick, bundle, data, predict_scores(bundle, data));
    } else if (opts.instance) {
        row_index = *opts.instance;
        if (row_index >= data.size()) {
            throw ValidationError("--instance " + std::to_string(row_index) +
                                  " is out of range; dataset has " + std::to_string(data.size()) +
                                  " rows");
        }
    } else {
        throw ValidationError("explain needs --instance N or --pick tp|tn|fp|fn");
    }
    const FeatureVector& instance = data.rows[row_index];

    // Background: the training-time split of this dataset when labels allow,
    // otherwise the whole dataset; either way capped by seeded subsampling.
    const LabeledDataset background = cap_rows(
        data.labeled() ? select_split(data, bundle, "train") : data, 256, seed);

    const ShapleyExplanation exp =
        opts.samples > 0
            ? mc_shapley(predictor, instance, background, opts.samples,
                         derive_seed(seed, kMcStream))
            : exact_shapley(predictor, instance, background);
    {
        auto json_out = open_output(dir / "explanation.json");
        write_shapley_json(json_out, exp, data.feature_names);
        finish_output(json_out, dir / "explanation.json");
    }

    for (std::size_t j = 0; j < data.dim(); ++j) {
        const std::vector<double> grid = build_grid(data, j, opts.grid_points);
        const IceCurve ice = ice_curve(predictor, instance, j, grid);
        const PdpCurve pdp = pdp_curve(predictor, background, j, grid);
        const std::string& name = data.feature_names[j];
        {
            auto csv = open_output(dir / ("ice_" + name + ".csv"));
            write_ice_csv(csv, ice, name);
            finish_output(csv, dir / ("ice_" + name + ".csv"));
        }
        {
            auto csv = open_output(dir / ("pdp_" + name + ".csv"));
            write_pdp_csv(csv, pdp, name);
            finish_output(csv, dir / ("pdp_" + name + ".csv"));
        }
        if (grid.size() == 1) {
            out << "note: feature " << name << " is constant in this dataset; single-point grid\n";
        }
    }

    out << "explained row " << row_index << (opts.pick.empty() ? "" : " (picked " + opts.pick + ")")
        << ": prediction " << format_fixed(exp.prediction, 3) << ", base value "
        << format_fixed(exp.base_value, 3) << ", method "
        << (exp.monte_carlo ? "monte_carlo(" + std::to_string(exp.samples) + ")" : "exact") << '\n';
    out << "wrote explanation.json plus ICE/PDP CSVs under " << dir.string() << '\n';
    return 0;
}

struct ReportOpts {
    std::string out_dir;
};

int cmd_report(const ReportOpts& opts, std::ostream& out) {
    const fs::path dir(opts.out_dir);
    if (!fs::is_directory(dir)) {
        throw ValidationError("report expects --out to name an existing artifact directory");
    }

    std::vector<std::string> manifest;
    const auto note = [&](const fs::path& path, const std::string& content) {
        write_text_file(path, content);
        manifest.push_back(path.filename().string());
    };

    bool rendered = false;
    if (fs::exists(dir / "metrics.json")) {
        auto in = open_input((dir / "metrics.json").string());
        nlohmann::json metrics;
        try {
            metrics = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("malformed metrics.json: ") + e.what());
        }
        if (fs::exists(dir / "roc.csv")) {
            auto csv = open_input((dir / "roc.csv").string());
            const CurvePoints curve = read_curve_csv(csv, "roc.csv");
            note(dir / "roc.svg", render_roc_chart(curve, metrics.at("auroc").get<double>()));
            rendered = true;
        }
        if (fs::exists(dir / "pr.csv")) {
            auto csv = open_input((dir / "pr.csv").string());
            const CurvePoints curve = read_curve_csv(csv, "pr.csv");
            note(dir / "pr.svg", render_pr_chart(curve, metrics.at("auprc").get<double>()));
            rendered = true;
        }
    }

    if (fs::exists(dir / "explanation.json")) {
        auto in = open_input((dir / "explanation.json").string());
        std::vector<std::string> names;
        const ShapleyExplanation exp = read_shapley_json(in, &names);
        note(dir / "shapley.svg", render_shapley_chart(exp, names));
        rendered = true;
    }

    std::vector<fs::path> ice_files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("ice_", 0) == 0 && entry.path().extension() == ".csv") {
            ice_files.push_back(entry.path());
        }
    }
    std::sort(ice_files.begin(), ice_files.end());
    for (const fs::path& ice_path : ice_files) {
        auto ice_in = open_input(ice_path.string());
        const CurveFile ice = read_curve_file(ice_in);
        std::optional<CurveFile> pdp;
        const fs::path pdp_path = dir / ("pdp_" + ice.feature_name + ".csv");
        if (fs::exists(pdp_path)) {
            auto pdp_in = open_input(pdp_path.string());
            pdp = read_curve_file(pdp_in);
        }
        const fs::path svg_path = dir / (ice_path.stem().string() + ".svg");
        note(svg_path, render_ice_chart(ice, pdp ? &*pdp : nullptr));
        rendered = true;
    }

    if (!rendered) {
        throw ValidationError("nothing to report: " + dir.string() +
                              " holds no metrics.json, explanation.json, or ice_*.csv");
    }

    std::sort(manifest.begin(), manifest.end());
    nlohmann::json doc;
    doc["format"] = "procqx-report";
    doc["version"] = 1;
    doc["files"] = manifest;
    write_json_file(dir / "report_manifest.json", doc);

    out << "rendered " << manifest.size() << " charts under " << dir.string()
        << " (see report_manifest.json)\n";
    return 0;
}

} // namespace

int run_command(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Process-outcome prediction and local explanation toolkit"};
    app.name("procqx");
    app.require_subcommand(1);
    app.fallthrough(); // let --seed/--config appear after the subcommand too

    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    app.add_option("--config", config_path, "JSON config file; flags override its fields");
    app.add_option("--seed", seed_flag,
                   "Master seed (beats config `seed` and the PROCQX_SEED variable; default 42)");

    GenerateOpts gen;
    auto* gen_cmd = app.add_subcommand("generate", "Sample a synthetic dataset CSV");
    gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
    gen_cmd->add_option("--dataset", gen.seed_dataset, "Seed dataset CSV to fit the generator to");
    gen_cmd->add_option("--generator", gen.generator_path, "Reuse a saved generator JSON");
    gen_cmd->add_option("--rows", gen.rows, "Rows to sample (default 5000)");
    gen_cmd->add_option("--kernels", gen.kernels, "Kernels per class when fitting (default 5)");

    ExtractOpts ext;
    auto* ext_cmd = app.add_subcommand("extract", "Turn event-log CSVs into a dataset CSV");
    ext_cmd->add_option("--events", ext.events_path, "Events CSV")->required();
    ext_cmd->add_option("--cases", ext.cases_path, "Cases CSV")->required();
    ext_cmd->add_option("--out", ext.out_dir, "Output directory")->required();

    TrainOpts tr;
    auto* tr_cmd = app.add_subcommand("train", "Train the classifier and save a model bundle");
    tr_cmd->add_option("--dataset", tr.dataset_path, "Labeled dataset CSV")->required();
    tr_cmd->add_option("--out", tr.out_dir, "Output directory")->required();

    EvaluateOpts ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "Score a split and write metrics + curves");
    ev_cmd->add_option("--model", ev.model_path, "Model bundle JSON")->required();
    ev_cmd->add_option("--dataset", ev.dataset_path, "Labeled dataset CSV")->required();
    ev_cmd->add_option("--out", ev.out_dir, "Output directory")->required();
    ev_cmd->add_option("--split", ev.split, "train | valid | test | all (default test)")
        ->check(CLI::IsMember({"train", "valid", "test", "all"}));

    ExplainOpts ex;
    auto* ex_cmd = app.add_subcommand("explain", "Explain one prediction");
    ex_cmd->add_option("--model", ex.model_path, "Model bundle JSON")->required();
    ex_cmd->add_option("--dataset", ex.dataset_path, "Dataset CSV")->required();
    ex_cmd->add_option("--out", ex.out_dir, "Output directory")->required();
    auto* inst_opt = ex_cmd->add_option("--instance", ex.instance, "Row index to explain");
    ex_cmd->add_option("--pick", ex.pick, "Explain the highest-confidence tp|tn|fp|fn instance")
        ->check(CLI::IsMember({"tp", "tn", "fp", "fn"}))
        ->excludes(inst_opt);
    auto* samples_opt =
        ex_cmd->add_option("--samples", ex.samples, "Monte Carlo samples; 0 = exact (default)");
    auto* grid_opt =
        ex_cmd->add_option("--grid-points", ex.grid_points, "ICE/PDP grid size (default 30)");

    ReportOpts rep;
    auto* rep_cmd = app.add_subcommand("report", "Render SVG charts for an artifact directory");
    rep_cmd->add_option("--out", rep.out_dir, "Artifact directory to render")->required();

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        err << app.help();
        return 2;
    }

    try {
        const nlohmann::json config = load_config_file(config_path);
        const std::uint64_t seed = resolve_seed(seed_flag, config);
        if (samples_opt->count() == 0) {
            ex.samples = config_number<std::size_t>(config, "samples", ex.samples);
        }
        if (grid_opt->count() == 0) {
            ex.grid_points = config_number<std::size_t>(config, "grid_points", ex.grid_points);
        }

        if (app.got_subcommand(gen_cmd)) return cmd_generate(gen, config, seed, out);
        if (app.got_subcommand(ext_cmd)) return cmd_extract(ext, out);
        if (app.got_subcommand(tr_cmd)) return cmd_train(tr, config, seed, out);
        if (app.got_subcommand(ev_cmd)) return cmd_evaluate(ev, out);
        if (app.got_subcommand(ex_cmd)) return cmd_explain(ex, seed, out);
        if (app.got_subcommand(rep_cmd)) return cmd_report(rep, out);
        err << "usage error: no subcommand selected\n";
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << '\n';
        return 4;
    }
}

} // namespace procqx
