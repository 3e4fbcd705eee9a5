#pragma once

#include "procqx/dataset.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace procqx {

struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + tn + fp + fn; }
};

/// Counts at a single cut-off. Passed is the positive class; a score equal
/// to the threshold predicts Passed.
ConfusionMatrix confusion_at(const std::vector<double>& scores, const std::vector<Label>& labels,
                             double threshold);

struct MetricsReport {
    double threshold = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double mcc_abs = 0.0;
    double fnr = 0.0;
    double fpr = 0.0;
    ConfusionMatrix confusion;
    /// Names of measures whose denominator was zero (reported as 0).
    std::vector<std::string> degenerate;
};

MetricsReport single_threshold_metrics(const ConfusionMatrix& cm, double threshold = 0.0);

/// One point per swept threshold. ROC: x = FPR, y = TPR; PR: x = recall,
/// y = precision.
struct CurvePoint {
    double threshold = 0.0;
    double x = 0.0;
    double y = 0.0;
};

struct CurvePoints {
    std::vector<CurvePoint> points;
};

struct RocResult {
    CurvePoints curve;
    double auroc = 0.0;
};

/// Thresholds sweep the distinct scores in descending order with ties
/// grouped; the area is trapezoidal, which equals the Mann-Whitney statistic
/// P(score_pos > score_neg) + P(tie)/2.
RocResult roc_auroc(const std::vector<double>& scores, const std::vector<Label>& labels);

struct PrResult {
    CurvePoints curve;
    double auprc = 0.0;
};

/// Step (rectangle) integration over the same descending sweep; precision is
/// not interpolated between points.
PrResult pr_auprc(const std::vector<double>& scores, const std::vector<Label>& labels);

struct ThresholdSearch {
    double threshold = 0.0;
    MetricsReport report;
};

/// Candidates are the midpoints of consecutive distinct sorted scores plus
/// one value below the minimum and one above the maximum; the smallest
/// candidate maximizing |MCC| wins.
ThresholdSearch best_mcc_threshold(const std::vector<double>& scores,
                                   const std::vector<Label>& labels);

/// `threshold,x,y` rows.
void write_curve_csv(const CurvePoints& curve, std::ostream& out);
CurvePoints read_curve_csv(std::istream& in, const std::string& source_name);

} // namespace procqx
