#pragma once

#include "procqx/evaluation.hpp"
#include "procqx/explain.hpp"

#include <string>
#include <vector>

namespace procqx {

/// All charts are self-contained SVG documents: inline styling, no external
/// assets, no timestamps, numbers taken verbatim from the machine-readable
/// inputs so the chart is a view and never the source of truth.

/// ROC line chart; the title carries the area formatted as "AUROC = 0.965".
std::string render_roc_chart(const CurvePoints& curve, double auroc);

/// Precision-recall line chart titled with "AUPRC = ...".
std::string render_pr_chart(const CurvePoints& curve, double auprc);

/// Horizontal signed bar chart, bars sorted by |phi| descending over a 600 px
/// value axis, annotated with the base value and the prediction.
std::string render_shapley_chart(const ShapleyExplanation& exp,
                                 const std::vector<std::string>& feature_names);

/// Pixel width of the Shapley value axis; tests recompute bar lengths from it.
inline constexpr double kShapleyAxisPx = 600.0;

/// ICE line chart with the observed value marked; an optional PDP curve on the
/// same grid is overlaid dashed.
std::string render_ice_chart(const CurveFile& ice, const CurveFile* pdp = nullptr);

} // namespace procqx
