#include <doctest.h>

#include "procqx/dataset.hpp"
#include "procqx/errors.hpp"
#include "procqx/evaluation.hpp"
#include "procqx/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

using namespace procqx;

namespace {

// pairwise Mann-Whitney statistic: P(pos > neg) + P(tie)/2
double mann_whitney(const std::vector<double>& scores, const std::vector<Label>& labels) {
    double concordant = 0.0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != Label::Passed) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != Label::Failed) continue;
            ++pairs;
            if (scores[i] > scores[j]) concordant += 1.0;
            else if (scores[i] == scores[j]) concordant += 0.5;
        }
    }
    return concordant / static_cast<double>(pairs);
}

// AUPRC recomputed from confusion_at calls at each distinct score, never
// touching the sweep internals.
double auprc_oracle(const std::vector<double>& scores, const std::vector<Label>& labels) {
    std::vector<double> distinct = scores;
    std::sort(distinct.begin(), distinct.end(), std::greater<>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::int64_t pos = 0;
    for (Label l : labels) pos += l == Label::Passed;
    double area = 0.0, prev_recall = 0.0;
    for (double t : distinct) {
        const ConfusionMatrix cm = confusion_at(scores, labels, t);
        const double recall = static_cast<double>(cm.tp) / static_cast<double>(pos);
        const double precision =
            static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

struct RandomInstance {
    std::vector<double> scores;
    std::vector<Label> labels;
};

// Small discrete score alphabet so ties across classes actually happen.
RandomInstance random_instance(Rng& rng, std::size_t n) {
    RandomInstance inst;
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        inst.scores.push_back(static_cast<double>(rng.below(7)) / 6.0);
        const bool pos = rng.uniform01() < 0.5;
        inst.labels.push_back(pos ? Label::Passed : Label::Failed);
        (pos ? has_pos : has_neg) = true;
    }
    if (!has_pos) inst.labels[0] = Label::Passed;
    if (!has_neg) inst.labels[n - 1] = Label::Failed;
    return inst;
}

} // namespace

TEST_CASE("confusion counts follow the score >= threshold rule") {
    const std::vector<double> scores{0.9, 0.2};
    const std::vector<Label> labels{Label::Passed, Label::Failed};
    const ConfusionMatrix cm = confusion_at(scores, labels, 0.5);
    CHECK(cm.tp == 1);
    CHECK(cm.tn == 1);
    CHECK(cm.fp == 0);
    CHECK(cm.fn == 0);

    const ConfusionMatrix high = confusion_at(scores, labels, 2.0);
    CHECK(high.tp == 0);
    CHECK(high.fp == 0);
    CHECK(high.fn == 1);
    CHECK(high.tn == 1);

    // equality counts as predicted Passed
    const ConfusionMatrix tie = confusion_at({0.5}, {Label::Passed}, 0.5);
    CHECK(tie.tp == 1);

    CHECK_THROWS_AS(confusion_at({0.5}, {}, 0.1), ValidationError);
}

TEST_CASE("the eight measures match hand-evaluated values") {
    const MetricsReport r = single_threshold_metrics({9, 9, 1, 1});
    CHECK(r.f1 == 0.9);
    CHECK(r.accuracy == 0.9);
    CHECK(r.precision == 0.9);
    CHECK(r.recall == 0.9);
    CHECK(r.specificity == 0.9);
    CHECK(r.mcc_abs == 0.8);
    CHECK(r.fnr == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(r.fpr == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(r.degenerate.empty());

    const MetricsReport chance = single_threshold_metrics({5, 5, 5, 5});
    CHECK(chance.accuracy == 0.5);
    CHECK(chance.mcc_abs == 0.0);

    const MetricsReport all_neg = single_threshold_metrics({0, 7, 0, 3});
    CHECK(all_neg.precision == 0.0);
    CHECK(std::find(all_neg.degenerate.begin(), all_neg.degenerate.end(), "precision") !=
          all_neg.degenerate.end());
    CHECK(std::find(all_neg.degenerate.begin(), all_neg.degenerate.end(), "mcc_abs") !=
          all_neg.degenerate.end());

    CHECK_THROWS_AS(single_threshold_metrics({0, 0, 0, 0}), ValidationError);
}

TEST_CASE("complement identities hold exactly for random matrices") {
    Rng rng(303);
    for (int trial = 0; trial < 500; ++trial) {
        const ConfusionMatrix cm{static_cast<std::int64_t>(rng.below(50)),
                                 static_cast<std::int64_t>(rng.below(50)),
                                 static_cast<std::int64_t>(rng.below(50)),
                                 static_cast<std::int64_t>(rng.below(50))};
        if (cm.total() == 0) continue;
        const MetricsReport r = single_threshold_metrics(cm);
        if (cm.tp + cm.fn > 0) CHECK(r.recall + r.fnr == 1.0);
        if (cm.tn + cm.fp > 0) CHECK(r.specificity + r.fpr == 1.0);
        CHECK(r.mcc_abs >= 0.0);
        CHECK(r.mcc_abs <= 1.0);
    }
}

TEST_CASE("mcc_abs is 1 exactly when there are no errors and both classes appear") {
    CHECK(single_threshold_metrics({3, 4, 0, 0}).mcc_abs == 1.0);
    CHECK(single_threshold_metrics({3, 4, 1, 0}).mcc_abs < 1.0);
    CHECK(single_threshold_metrics({3, 4, 0, 1}).mcc_abs < 1.0);
}

TEST_CASE("AUROC equals the hand-counted pair statistic") {
    // one concordant pair (0.9 vs 0.8) and one discordant (0.3 vs 0.8)
    const std::vector<double> scores{0.9, 0.8, 0.3};
    const std::vector<Label> labels{Label::Passed, Label::Failed, Label::Passed};
    CHECK(roc_auroc(scores, labels).auroc == 0.5);

    // perfect ranking
    CHECK(roc_auroc({0.9, 0.8, 0.2, 0.1},
                    {Label::Passed, Label::Passed, Label::Failed, Label::Failed})
              .auroc == 1.0);

    // all ties -> exactly 0.5
    CHECK(roc_auroc({0.4, 0.4, 0.4}, {Label::Passed, Label::Failed, Label::Passed}).auroc == 0.5);

    CHECK_THROWS_AS(roc_auroc({0.1, 0.2}, {Label::Passed, Label::Passed}), ValidationError);
}

TEST_CASE("trapezoidal AUROC matches Mann-Whitney on random tied data") {
    Rng rng(404);
    for (int trial = 0; trial < 300; ++trial) {
        const RandomInstance inst = random_instance(rng, 2 + rng.below(198));
        const double got = roc_auroc(inst.scores, inst.labels).auroc;
        const double want = mann_whitney(inst.scores, inst.labels);
        CHECK(std::abs(got - want) < 1e-12);
    }
}

TEST_CASE("AUROC is invariant under strictly increasing score transforms") {
    Rng rng(505);
    for (int trial = 0; trial < 100; ++trial) {
        const RandomInstance inst = random_instance(rng, 2 + rng.below(60));
        std::vector<double> warped = inst.scores;
        for (double& s : warped) s = std::exp(3.0 * s) + 7.0;
        const double a = roc_auroc(inst.scores, inst.labels).auroc;
        const double b = roc_auroc(warped, inst.labels).auroc;
        CHECK(std::abs(a - b) < 1e-12);
    }
}

TEST_CASE("ROC curve runs from (0,0) to (1,1) monotonically and matches confusion_at") {
    Rng rng(606);
    const RandomInstance inst = random_instance(rng, 50);
    const RocResult roc = roc_auroc(inst.scores, inst.labels);
    const auto& pts = roc.curve.points;
    REQUIRE(pts.size() >= 2);
    CHECK(pts.front().x == 0.0);
    CHECK(pts.front().y == 0.0);
    CHECK(pts.back().x == 1.0);
    CHECK(pts.back().y == 1.0);
    std::int64_t pos = 0, neg = 0;
    for (Label l : inst.labels) (l == Label::Passed ? pos : neg)++;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        CHECK(pts[i].x >= pts[i - 1].x);
        CHECK(pts[i].y >= pts[i - 1].y);
        const ConfusionMatrix cm = confusion_at(inst.scores, inst.labels, pts[i].threshold);
        CHECK(pts[i].x == static_cast<double>(cm.fp) / static_cast<double>(neg));
        CHECK(pts[i].y == static_cast<double>(cm.tp) / static_cast<double>(pos));
    }
}

TEST_CASE("AUPRC: perfect ranking, constant baseline, and the brute-force oracle") {
    CHECK(pr_auprc({0.9, 0.8, 0.2, 0.1},
                   {Label::Passed, Label::Passed, Label::Failed, Label::Failed})
              .auprc == 1.0);

    // constant scores: single sweep step with precision = prevalence
    const double auprc =
        pr_auprc({0.3, 0.3, 0.3, 0.3},
                 {Label::Passed, Label::Failed, Label::Failed, Label::Failed})
            .auprc;
    CHECK(auprc == 0.25);

    Rng rng(707);
    for (int trial = 0; trial < 400; ++trial) {
        const RandomInstance inst = random_instance(rng, 2 + rng.below(7));
        const double got = pr_auprc(inst.scores, inst.labels).auprc;
        const double want = auprc_oracle(inst.scores, inst.labels);
        CHECK(std::abs(got - want) < 1e-12);
    }

    CHECK_THROWS_AS(pr_auprc({0.1}, {Label::Failed}), ValidationError);
}

TEST_CASE("best MCC threshold: hand case, shift invariance, and exhaustive oracle") {
    const std::vector<double> scores{0.1, 0.4, 0.6, 0.9};
    const std::vector<Label> labels{Label::Failed, Label::Failed, Label::Passed, Label::Passed};
    const ThresholdSearch s = best_mcc_threshold(scores, labels);
    CHECK(s.threshold == 0.5);
    CHECK(s.report.mcc_abs == 1.0);

    std::vector<double> shifted = scores;
    for (double& v : shifted) v += 2.0;
    const ThresholdSearch s2 = best_mcc_threshold(shifted, labels);
    CHECK(s2.threshold == 2.5);
    CHECK(s2.report.mcc_abs == 1.0);

    Rng rng(808);
    for (int trial = 0; trial < 300; ++trial) {
        const RandomInstance inst = random_instance(rng, 2 + rng.below(9));
        const ThresholdSearch best = best_mcc_threshold(inst.scores, inst.labels);

        // every threshold equivalence class, probed independently
        std::vector<double> distinct = inst.scores;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        // the documented candidate grid: below-min, midpoints, above-max
        std::vector<double> probes{distinct.front() - 0.5};
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
            probes.push_back((distinct[i] + distinct[i + 1]) / 2.0);
        }
        probes.push_back(distinct.back() + 0.5);
        double best_possible = 0.0;
        for (double t : probes) {
            const MetricsReport r = single_threshold_metrics(confusion_at(inst.scores, inst.labels, t), t);
            best_possible = std::max(best_possible, r.mcc_abs);
        }
        CHECK(best.report.mcc_abs == best_possible);

        // no candidate below the returned threshold does as well (smallest-tie rule)
        for (double t : probes) {
            if (t < best.threshold) {
                const MetricsReport r =
                    single_threshold_metrics(confusion_at(inst.scores, inst.labels, t), t);
                CHECK(r.mcc_abs < best.report.mcc_abs);
            }
        }
    }
}

TEST_CASE("curve CSV round-trips including the infinite lead-in threshold") {
    const RocResult roc =
        roc_auroc({0.9, 0.5, 0.5, 0.1},
                  {Label::Passed, Label::Passed, Label::Failed, Label::Failed});
    std::ostringstream out;
    write_curve_csv(roc.curve, out);
    CHECK(out.str().rfind("threshold,x,y\n", 0) == 0);
    std::istringstream in(out.str());
    const CurvePoints back = read_curve_csv(in, "rt");
    REQUIRE(back.points.size() == roc.curve.points.size());
    for (std::size_t i = 0; i < back.points.size(); ++i) {
        CHECK(back.points[i].threshold == roc.curve.points[i].threshold);
        CHECK(back.points[i].x == roc.curve.points[i].x);
        CHECK(back.points[i].y == roc.curve.points[i].y);
    }
}
