#include "procqx/svg_charts.hpp"

#include "procqx/errors.hpp"
#include "procqx/numeric_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace procqx {

namespace {

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string tick_label(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Frame {
    double width, height, left, top, plot_w, plot_h;
};

void open_svg(std::ostringstream& svg, const Frame& f, const std::string& title) {
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(f.width)
        << "\" height=\"" << format_double(f.height) << "\" viewBox=\"0 0 "
        << format_double(f.width) << ' ' << format_double(f.height)
        << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    svg << "  <title>" << xml_escape(title) << "</title>\n";
    svg << "  <rect x=\"0\" y=\"0\" width=\"" << format_double(f.width) << "\" height=\""
        << format_double(f.height) << "\" fill=\"white\"/>\n";
    svg << "  <text x=\"" << format_double(f.width / 2.0)
        << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
        << "</text>\n";
}

/// Unit-square line chart shared by the ROC and PR renderers.
std::string render_rate_chart(const CurvePoints& curve, const std::string& title,
                              const std::string& x_label, const std::string& y_label,
                              bool diagonal) {
    if (curve.points.empty()) throw ValidationError("cannot chart an empty curve");
    const Frame f{720, 540, 80, 60, 600, 420};
    const auto px = [&](double x) { return f.left + x * f.plot_w; };
    const auto py = [&](double y) { return f.top + (1.0 - y) * f.plot_h; };

    std::ostringstream svg;
    open_svg(svg, f, title);

    svg << "  <g stroke=\"#444\" stroke-width=\"1\">\n";
    svg << "    <line x1=\"" << format_double(f.left) << "\" y1=\"" << format_double(py(0))
        << "\" x2=\"" << format_double(px(1)) << "\" y2=\"" << format_double(py(0)) << "\"/>\n";
    svg << "    <line x1=\"" << format_double(f.left) << "\" y1=\"" << format_double(py(0))
        << "\" x2=\"" << format_double(f.left) << "\" y2=\"" << format_double(py(1)) << "\"/>\n";
    svg << "  </g>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = static_cast<double>(i) / 4.0;
        svg << "  <text x=\"" << format_double(px(v)) << "\" y=\""
            << format_double(py(0) + 20) << "\" text-anchor=\"middle\">" << tick_label(v)
            << "</text>\n";
        svg << "  <text x=\"" << format_double(f.left - 10) << "\" y=\""
            << format_double(py(v) + 4) << "\" text-anchor=\"end\">" << tick_label(v)
            << "</text>\n";
    }
    svg << "  <text x=\"" << format_double(px(0.5)) << "\" y=\""
        << format_double(f.height - 12) << "\" text-anchor=\"middle\">" << xml_escape(x_label)
        << "</text>\n";
    svg << "  <text x=\"22\" y=\"" << format_double(py(0.5))
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 22 " << format_double(py(0.5))
        << ")\">" << xml_escape(y_label) << "</text>\n";
    if (diagonal) {
        svg << "  <line x1=\"" << format_double(px(0)) << "\" y1=\"" << format_double(py(0))
            << "\" x2=\"" << format_double(px(1)) << "\" y2=\"" << format_double(py(1))
            << "\" stroke=\"#bbb\" stroke-dasharray=\"5,4\"/>\n";
    }

    svg << "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (i) svg << ' ';
        svg << format_double(px(curve.points[i].x)) << ',' << format_double(py(curve.points[i].y));
    }
    svg << "\"/>\n";
    svg << "</svg>\n";
    return svg.str();
}

} // namespace

std::string render_roc_chart(const CurvePoints& curve, double auroc) {
    return render_rate_chart(curve, "ROC curve, AUROC = " + format_fixed(auroc, 3),
                             "false positive rate", "true positive rate", true);
}

std::string render_pr_chart(const CurvePoints& curve, double auprc) {
    return render_rate_chart(curve, "Precision-recall curve, AUPRC = " + format_fixed(auprc, 3),
                             "recall", "precision", false);
}

std::string render_shapley_chart(const ShapleyExplanation& exp,
                                 const std::vector<std::string>& feature_names) {
    const std::size_t n = exp.contributions.size();
    if (n == 0) throw ValidationError("cannot chart an empty explanation");
    if (feature_names.size() != n) {
        throw ValidationError("feature name count does not match contribution count");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(exp.contributions[a]) > std::abs(exp.contributions[b]);
    });

    double max_abs = 0.0;
    for (double phi : exp.contributions) max_abs = std::max(max_abs, std::abs(phi));
    if (max_abs == 0.0) max_abs = 1.0;  // all-zero bars; keep the mapping finite

    const double bar_h = 24.0, gap = 12.0, left = 170.0, top = 90.0;
    const double plot_h = static_cast<double>(n) * (bar_h + gap) - gap;
    const Frame f{left + kShapleyAxisPx + 50.0, top + plot_h + 60.0, left, top, kShapleyAxisPx,
                  plot_h};
    // value axis spans [-max_abs, +max_abs] over kShapleyAxisPx pixels
    const auto px = [&](double v) { return left + (v + max_abs) / (2.0 * max_abs) * kShapleyAxisPx; };

    std::ostringstream svg;
    open_svg(svg, f, "Feature contributions to this prediction");
    svg << "  <text x=\"" << format_double(f.width / 2.0)
        << "\" y=\"52\" text-anchor=\"middle\" fill=\"#333\">base value = "
        << format_fixed(exp.base_value, 3) << ", prediction = " << format_fixed(exp.prediction, 3)
        << (exp.monte_carlo ? " (Monte Carlo estimate)" : "") << "</text>\n";

    svg << "  <line x1=\"" << format_double(px(0.0)) << "\" y1=\"" << format_double(top - 10)
        << "\" x2=\"" << format_double(px(0.0)) << "\" y2=\"" << format_double(top + plot_h + 10)
        << "\" stroke=\"#444\"/>\n";
    for (double v : {-max_abs, 0.0, max_abs}) {
        svg << "  <text x=\"" << format_double(px(v)) << "\" y=\""
            << format_double(top + plot_h + 32) << "\" text-anchor=\"middle\">" << tick_label(v)
            << "</text>\n";
    }

    for (std::size_t rank = 0; rank < n; ++rank) {
        const std::size_t j = order[rank];
        const double phi = exp.contributions[j];
        const double y = top + static_cast<double>(rank) * (bar_h + gap);
        const double x0 = px(0.0);
        const double x1 = px(phi);
        const double bar_x = std::min(x0, x1);
        const double bar_w = std::abs(x1 - x0);
        svg << "  <rect class=\"bar\" data-feature=\"" << xml_escape(feature_names[j])
            << "\" data-phi=\"" << format_double(phi) << "\" x=\"" << format_double(bar_x)
            << "\" y=\"" << format_double(y) << "\" width=\"" << format_double(bar_w)
            << "\" height=\"" << format_double(bar_h) << "\" fill=\""
            << (phi >= 0.0 ? "#2ca02c" : "#d62728") << "\"/>\n";
        svg << "  <text x=\"" << format_double(left - 10) << "\" y=\""
            << format_double(y + bar_h / 2.0 + 4) << "\" text-anchor=\"end\">"
            << xml_escape(feature_names[j]) << "</text>\n";
        const bool label_right = phi >= 0.0;
        svg << "  <text x=\"" << format_double(label_right ? x1 + 6 : x1 - 6) << "\" y=\""
            << format_double(y + bar_h / 2.0 + 4) << "\" text-anchor=\""
            << (label_right ? "start" : "end") << "\" fill=\"#333\">" << format_fixed(phi, 3);
        if (exp.monte_carlo && !exp.std_errors.empty()) {
            svg << " &#177; " << format_fixed(exp.std_errors[j], 3);
        }
        svg << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string render_ice_chart(const CurveFile& ice, const CurveFile* pdp) {
    if (ice.grid.empty()) throw ValidationError("cannot chart an empty curve");
    if (pdp && pdp->grid != ice.grid) {
        throw ValidationError("PDP overlay must share the ICE grid");
    }

    const Frame f{720, 540, 80, 60, 600, 420};
    const double lo = ice.grid.front();
    const double hi = ice.grid.back();
    const double span = hi > lo ? hi - lo : 1.0;
    const auto px = [&](double g) { return f.left + (g - lo) / span * f.plot_w; };
    const auto py = [&](double s) { return f.top + (1.0 - s) * f.plot_h; };

    std::ostringstream svg;
    open_svg(svg, f, "ICE, " + ice.feature_name);

    svg << "  <g stroke=\"#444\" stroke-width=\"1\">\n";
    svg << "    <line x1=\"" << format_double(f.left) << "\" y1=\"" << format_double(py(0))
        << "\" x2=\"" << format_double(f.left + f.plot_w) << "\" y2=\"" << format_double(py(0))
        << "\"/>\n";
    svg << "    <line x1=\"" << format_double(f.left) << "\" y1=\"" << format_double(py(0))
        << "\" x2=\"" << format_double(f.left) << "\" y2=\"" << format_double(py(1)) << "\"/>\n";
    svg << "  </g>\n";
    for (int i = 0; i <= 4; ++i) {
        const double frac = static_cast<double>(i) / 4.0;
        svg << "  <text x=\"" << format_double(f.left + frac * f.plot_w) << "\" y=\""
            << format_double(py(0) + 20) << "\" text-anchor=\"middle\">"
            << tick_label(lo + frac * span) << "</text>\n";
        svg << "  <text x=\"" << format_double(f.left - 10) << "\" y=\""
            << format_double(py(frac) + 4) << "\" text-anchor=\"end\">" << tick_label(frac)
            << "</text>\n";
    }
    svg << "  <text x=\"" << format_double(f.left + f.plot_w / 2.0) << "\" y=\""
        << format_double(f.height - 12) << "\" text-anchor=\"middle\">"
        << xml_escape(ice.feature_name) << "</text>\n";
    svg << "  <text x=\"22\" y=\"" << format_double(py(0.5))
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 22 " << format_double(py(0.5))
        << ")\">model score</text>\n";

    // instance's observed value
    if (ice.observed_value >= lo && ice.observed_value <= hi) {
        const double ox = px(ice.observed_value);
        svg << "  <line class=\"observed\" x1=\"" << format_double(ox) << "\" y1=\""
            << format_double(py(0)) << "\" x2=\"" << format_double(ox) << "\" y2=\""
            << format_double(py(1)) << "\" stroke=\"#888\" stroke-dasharray=\"4,3\"/>\n";
        svg << "  <text x=\"" << format_double(ox) << "\" y=\"" << format_double(f.top - 8)
            << "\" text-anchor=\"middle\" fill=\"#555\">observed = "
            << tick_label(ice.observed_value) << "</text>\n";
    }

    const auto polyline = [&](const std::vector<double>& grid, const std::vector<double>& scores,
                              const char* style) {
        svg << "  <polyline fill=\"none\" " << style << " points=\"";
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (i) svg << ' ';
            svg << format_double(px(grid[i])) << ',' << format_double(py(scores[i]));
        }
        svg << "\"/>\n";
    };
    polyline(ice.grid, ice.scores, "class=\"ice\" stroke=\"#1f77b4\" stroke-width=\"2\"");
    if (pdp) {
        polyline(pdp->grid, pdp->scores,
                 "class=\"pdp\" stroke=\"#ff7f0e\" stroke-width=\"2\" stroke-dasharray=\"7,4\"");
        svg << "  <text x=\"" << format_double(f.left + f.plot_w - 8) << "\" y=\""
            << format_double(f.top + 18)
            << "\" text-anchor=\"end\" fill=\"#ff7f0e\">dashed = dataset mean (PDP)</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace procqx
