#include "procqx/model_bundle.hpp"

#include "procqx/errors.hpp"
#include "procqx/numeric_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

namespace procqx {

namespace {
constexpr int kBundleVersion = 1;
}

void ModelBundle::validate() const {
    config.validate();
    if (feature_names.size() != config.input_dim) {
        throw ValidationError("bundle feature names do not match the network input width");
    }
    if (standardizer.mean.size() != config.input_dim ||
        standardizer.stddev.size() != config.input_dim) {
        throw ValidationError("bundle standardizer does not match the network input width");
    }
    for (double sd : standardizer.stddev) {
        if (!(sd > 0.0)) throw ValidationError("bundle standardizer has a non-positive stddev");
    }
    if (net.layers.size() != config.hidden_sizes.size() + 1) {
        throw ValidationError("bundle network layer count does not match its config");
    }
    std::size_t expect_in = config.input_dim;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        const std::size_t expect_out =
            l < config.hidden_sizes.size() ? config.hidden_sizes[l] : 1;
        if (layer.in != expect_in || layer.out != expect_out) {
            throw ValidationError("bundle layer " + std::to_string(l) + " has shape " +
                                  std::to_string(layer.in) + "x" + std::to_string(layer.out) +
                                  ", expected " + std::to_string(expect_in) + "x" +
                                  std::to_string(expect_out));
        }
        if (layer.w.size() != layer.in * layer.out || layer.b.size() != layer.out) {
            throw ValidationError("bundle layer " + std::to_string(l) +
                                  " weight/bias storage does not match its shape");
        }
        expect_in = expect_out;
    }
    if (!std::isfinite(threshold)) throw ValidationError("bundle threshold is not finite");
    const double ratio_sum = split_ratios.train + split_ratios.valid + split_ratios.test;
    if (!(split_ratios.train > 0.0) || !(split_ratios.valid > 0.0) ||
        !(split_ratios.test > 0.0) || std::abs(ratio_sum - 1.0) > 1e-9) {
        throw ValidationError("bundle split ratios must be positive and sum to 1");
    }
}

double predict_raw(const ModelBundle& bundle, const FeatureVector& row) {
    if (row.size() != bundle.config.input_dim) {
        throw ValidationError("row has " + std::to_string(row.size()) + " features, model expects " +
                              std::to_string(bundle.config.input_dim));
    }
    FeatureVector z(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
        z[j] = (row[j] - bundle.standardizer.mean[j]) / bundle.standardizer.stddev[j];
    }
    return forward(bundle.net, z);
}

std::vector<double> predict_scores(const ModelBundle& bundle, const LabeledDataset& data) {
    std::vector<double> scores;
    scores.reserve(data.size());
    for (const auto& row : data.rows) scores.push_back(predict_raw(bundle, row));
    return scores;
}

Predictor make_predictor(const ModelBundle& bundle) {
    return [bundle](const FeatureVector& row) { return predict_raw(bundle, row); };
}

nlohmann::json bundle_to_json(const ModelBundle& bundle) {
    nlohmann::json doc;
    doc["format"] = "procqx-model";
    doc["version"] = kBundleVersion;
    doc["config"] = {{"input_dim", bundle.config.input_dim},
                     {"hidden_sizes", bundle.config.hidden_sizes},
                     {"input_dropout", bundle.config.input_dropout},
                     {"hidden_dropout", bundle.config.hidden_dropout},
                     {"max_epochs", bundle.config.max_epochs},
                     {"rho", bundle.config.rho},
                     {"epsilon", bundle.config.epsilon},
                     {"max_w2", bundle.config.max_w2},
                     {"stopping_rounds", bundle.config.stopping_rounds},
                     {"stopping_tolerance", bundle.config.stopping_tolerance},
                     {"minibatch_size", bundle.config.minibatch_size},
                     {"seed", bundle.config.seed}};
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& layer : bundle.net.layers) {
        layers.push_back(
            {{"in", layer.in}, {"out", layer.out}, {"w", layer.w}, {"b", layer.b}});
    }
    doc["layers"] = std::move(layers);
    doc["standardizer"] = {{"mean", bundle.standardizer.mean},
                           {"stddev", bundle.standardizer.stddev}};
    doc["feature_names"] = bundle.feature_names;
    nlohmann::json rounds = nlohmann::json::array();
    for (const ScoringRound& r : bundle.history.rounds) {
        rounds.push_back(
            {{"epoch", r.epoch}, {"val_auroc", r.val_auroc}, {"train_loss", r.train_loss}});
    }
    doc["history"] = {{"rounds", std::move(rounds)},
                      {"stopped_early", bundle.history.stopped_early},
                      {"best_epoch", bundle.history.best_epoch},
                      {"best_auroc", bundle.history.best_auroc},
                      {"final_validation_auroc", bundle.history.final_validation_auroc}};
    doc["threshold"] = bundle.threshold;
    doc["split"] = {{"train", bundle.split_ratios.train},
                    {"valid", bundle.split_ratios.valid},
                    {"test", bundle.split_ratios.test},
                    {"seed", bundle.split_seed}};
    return doc;
}

ModelBundle bundle_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "procqx-model") {
            throw ValidationError("not a model file (format field mismatch)");
        }
        if (doc.at("version") != kBundleVersion) {
            throw ValidationError("unsupported model version " + doc.at("version").dump() +
                                  "; this build reads version " + std::to_string(kBundleVersion));
        }
        ModelBundle bundle;
        const auto& cfg = doc.at("config");
        bundle.config.input_dim = cfg.at("input_dim").get<std::size_t>();
        bundle.config.hidden_sizes = cfg.at("hidden_sizes").get<std::vector<std::size_t>>();
        bundle.config.input_dropout = cfg.at("input_dropout").get<double>();
        bundle.config.hidden_dropout = cfg.at("hidden_dropout").get<std::vector<double>>();
        bundle.config.max_epochs = cfg.at("max_epochs").get<std::size_t>();
        bundle.config.rho = cfg.at("rho").get<double>();
        bundle.config.epsilon = cfg.at("epsilon").get<double>();
        bundle.config.max_w2 = cfg.at("max_w2").get<double>();
        bundle.config.stopping_rounds = cfg.at("stopping_rounds").get<std::size_t>();
        bundle.config.stopping_tolerance = cfg.at("stopping_tolerance").get<double>();
        bundle.config.minibatch_size = cfg.at("minibatch_size").get<std::size_t>();
        bundle.config.seed = cfg.at("seed").get<std::uint64_t>();
        for (const auto& l : doc.at("layers")) {
            Layer layer;
            layer.in = l.at("in").get<std::size_t>();
            layer.out = l.at("out").get<std::size_t>();
            layer.w = l.at("w").get<std::vector<double>>();
            layer.b = l.at("b").get<std::vector<double>>();
            bundle.net.layers.push_back(std::move(layer));
        }
        bundle.standardizer.mean = doc.at("standardizer").at("mean").get<std::vector<double>>();
        bundle.standardizer.stddev =
            doc.at("standardizer").at("stddev").get<std::vector<double>>();
        bundle.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        const auto& hist = doc.at("history");
        for (const auto& r : hist.at("rounds")) {
            ScoringRound round;
            round.epoch = r.at("epoch").get<std::size_t>();
            round.val_auroc = r.at("val_auroc").get<double>();
            round.train_loss = r.at("train_loss").get<double>();
            bundle.history.rounds.push_back(round);
        }
        bundle.history.stopped_early = hist.at("stopped_early").get<bool>();
        bundle.history.best_epoch = hist.at("best_epoch").get<std::size_t>();
        bundle.history.best_auroc = hist.at("best_auroc").get<double>();
        bundle.history.final_validation_auroc =
            hist.at("final_validation_auroc").get<double>();
        bundle.threshold = doc.at("threshold").get<double>();
        bundle.split_ratios.train = doc.at("split").at("train").get<double>();
        bundle.split_ratios.valid = doc.at("split").at("valid").get<double>();
        bundle.split_ratios.test = doc.at("split").at("test").get<double>();
        bundle.split_seed = doc.at("split").at("seed").get<std::uint64_t>();
        bundle.validate();
        return bundle;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed model JSON: ") + e.what());
    }
}

void save_model(const ModelBundle& bundle, const std::string& path) {
    bundle.validate();
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << bundle_to_json(bundle).dump(2) << '\n';
    if (!out) throw ValidationError("failed writing model to " + path);
}

ModelBundle load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("model file " + path + " is not valid JSON: " + e.what());
    }
    return bundle_from_json(doc);
}

void write_history_csv(std::ostream& out, const TrainingHistory& history) {
    out << "epoch,val_auroc,train_loss\n";
    for (const ScoringRound& r : history.rounds) {
        out << r.epoch << ',' << format_double(r.val_auroc) << ','
            << format_double(r.train_loss) << '\n';
    }
}

} // namespace procqx
