#include "procqx/evaluation.hpp"

#include "procqx/csv.hpp"
#include "procqx/errors.hpp"
#include "procqx/numeric_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace procqx {

namespace {

void check_inputs(const std::vector<double>& scores, const std::vector<Label>& labels) {
    if (scores.size() != labels.size()) {
        throw ValidationError("scores (" + std::to_string(scores.size()) + ") and labels (" +
                              std::to_string(labels.size()) + ") differ in length");
    }
    if (scores.empty()) {
        throw ValidationError("cannot evaluate an empty score list");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) throw ValidationError("non-finite score");
    }
}

std::int64_t count_positives(const std::vector<Label>& labels) {
    std::int64_t p = 0;
    for (Label l : labels) {
        if (l == Label::Passed) ++p;
    }
    return p;
}

// (score, label) pairs sorted by score descending.
std::vector<std::pair<double, Label>> sorted_desc(const std::vector<double>& scores,
                                                  const std::vector<Label>& labels) {
    std::vector<std::pair<double, Label>> v(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) v[i] = {scores[i], labels[i]};
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    return v;
}

} // namespace

ConfusionMatrix confusion_at(const std::vector<double>& scores, const std::vector<Label>& labels,
                             double threshold) {
    check_inputs(scores, labels);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted_passed = scores[i] >= threshold;
        const bool is_passed = labels[i] == Label::Passed;
        if (predicted_passed && is_passed) ++cm.tp;
        else if (predicted_passed && !is_passed) ++cm.fp;
        else if (!predicted_passed && is_passed) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

MetricsReport single_threshold_metrics(const ConfusionMatrix& cm, double threshold) {
    if (cm.total() <= 0) {
        throw ValidationError("empty confusion matrix");
    }
    MetricsReport r;
    r.threshold = threshold;
    r.confusion = cm;

    const auto ratio = [&r](std::int64_t num, std::int64_t den, const char* name) {
        if (den == 0) {
            r.degenerate.push_back(name);
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };

    r.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn, "f1");
    r.accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy");
    r.precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
    r.recall = ratio(cm.tp, cm.tp + cm.fn, "recall");
    r.specificity = ratio(cm.tn, cm.tn + cm.fp, "specificity");
    r.fnr = ratio(cm.fn, cm.fn + cm.tp, "fnr");
    r.fpr = ratio(cm.fp, cm.tn + cm.fp, "fpr");

    const double mcc_den_sq = static_cast<double>(cm.tp + cm.fp) *
                              static_cast<double>(cm.tp + cm.fn) *
                              static_cast<double>(cm.tn + cm.fp) *
                              static_cast<double>(cm.tn + cm.fn);
    if (mcc_den_sq == 0.0) {
        r.degenerate.push_back("mcc_abs");
        r.mcc_abs = 0.0;
    } else {
        const std::int64_t num = cm.tp * cm.tn - cm.fp * cm.fn;
        r.mcc_abs = static_cast<double>(num < 0 ? -num : num) / std::sqrt(mcc_den_sq);
    }
    return r;
}

RocResult roc_auroc(const std::vector<double>& scores, const std::vector<Label>& labels) {
    check_inputs(scores, labels);
    const std::int64_t pos = count_positives(labels);
    const std::int64_t neg = static_cast<std::int64_t>(labels.size()) - pos;
    if (pos == 0 || neg == 0) {
        throw ValidationError("ROC needs both classes present");
    }

    const auto sorted = sorted_desc(scores, labels);
    RocResult res;
    res.curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});

    std::int64_t tp = 0, fp = 0;
    double area2 = 0.0; // twice the trapezoid sum, in count units
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double s = sorted[i].first;
        std::int64_t tp_g = 0, fp_g = 0;
        while (i < sorted.size() && sorted[i].first == s) {
            (sorted[i].second == Label::Passed ? tp_g : fp_g)++;
            ++i;
        }
        // trapezoid over the fp increment of this tie group
        area2 += static_cast<double>(fp_g) * static_cast<double>(2 * tp + tp_g);
        tp += tp_g;
        fp += fp_g;
        res.curve.points.push_back({s, static_cast<double>(fp) / static_cast<double>(neg),
                                    static_cast<double>(tp) / static_cast<double>(pos)});
    }
    res.auroc = area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return res;
}

PrResult pr_auprc(const std::vector<double>& scores, const std::vector<Label>& labels) {
    check_inputs(scores, labels);
    const std::int64_t pos = count_positives(labels);
    if (pos == 0) {
        throw ValidationError("PR curve needs at least one Passed row");
    }

    const auto sorted = sorted_desc(scores, labels);
    PrResult res;
    std::int64_t tp = 0, fp = 0;
    double prev_recall = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double s = sorted[i].first;
        while (i < sorted.size() && sorted[i].first == s) {
            (sorted[i].second == Label::Passed ? tp : fp)++;
            ++i;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        res.auprc += (recall - prev_recall) * precision;
        prev_recall = recall;
        res.curve.points.push_back({s, recall, precision});
    }
    return res;
}

ThresholdSearch best_mcc_threshold(const std::vector<double>& scores,
                                   const std::vector<Label>& labels) {
    check_inputs(scores, labels);
    const std::int64_t pos = count_positives(labels);
    if (pos == 0 || pos == static_cast<std::int64_t>(labels.size())) {
        throw ValidationError("MCC threshold search needs both classes present");
    }

    std::vector<double> distinct = scores;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> candidates;
    candidates.push_back(distinct.front() - 0.5);
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        candidates.push_back((distinct[i] + distinct[i + 1]) / 2.0);
    }
    candidates.push_back(distinct.back() + 0.5);

    ThresholdSearch best;
    bool have = false;
    for (double t : candidates) {
        const MetricsReport r = single_threshold_metrics(confusion_at(scores, labels, t), t);
        if (!have || r.mcc_abs > best.report.mcc_abs) {
            best.threshold = t;
            best.report = r;
            have = true;
        }
    }
    return best;
}

void write_curve_csv(const CurvePoints& curve, std::ostream& out) {
    write_csv_row(out, {"threshold", "x", "y"});
    for (const auto& p : curve.points) {
        write_csv_row(out, {format_double(p.threshold), format_double(p.x), format_double(p.y)});
    }
}

CurvePoints read_curve_csv(std::istream& in, const std::string& source_name) {
    const CsvTable table = read_csv(in, source_name);
    require_header(table, {"threshold", "x", "y"}, source_name);
    CurvePoints curve;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string where = source_name + " line " + std::to_string(table.line_numbers[r]);
        const auto& f = table.rows[r];
        const double t = f[0] == "inf" ? std::numeric_limits<double>::infinity()
                                       : parse_double(f[0], where + " threshold");
        curve.points.push_back({t, parse_double(f[1], where + " x"), parse_double(f[2], where + " y")});
    }
    return curve;
}

} // namespace procqx
