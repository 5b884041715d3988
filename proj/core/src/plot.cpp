#include "hotgp/plot.hpp"

#include "hotgp/errors.hpp"
#include "hotgp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace hotgp {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

CurveSeries curve_from_run_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    CurveSeries series;
    series.label = fs::path(dir).filename().string();
    if (series.label.empty()) series.label = fs::path(dir).parent_path().filename().string();

    const fs::path agg = fs::path(dir) / "aggregate.csv";
    if (fs::exists(agg)) {
        for (const auto& row : read_aggregate_csv(agg.string())) {
            series.x.push_back(static_cast<double>(row.env_steps));
            series.mean.push_back(row.mean_eval_return);
            series.stddev.push_back(row.eval_return_std);
        }
        return series;
    }
    const fs::path metrics = fs::path(dir) / "metrics.csv";
    if (!fs::exists(metrics)) {
        throw ConfigError("no metrics.csv or aggregate.csv in " + dir);
    }
    for (const auto& row : read_metrics_csv(metrics.string())) {
        series.x.push_back(static_cast<double>(row.env_steps));
        series.mean.push_back(row.mean_eval_return);
        series.stddev.push_back(row.eval_return_std);
    }
    return series;
}

std::string render_learning_curves(const std::vector<CurveSeries>& series, int width,
                                   int height) {
    const double ml = 78, mr = 24, mt = 30, mb = 52;  // margins
    const double pw = width - ml - mr;
    const double ph = height - mt - mb;

    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double lo = s.mean[i] - s.stddev[i];
            const double hi = s.mean[i] + s.stddev[i];
            if (first) {
                x_min = x_max = s.x[i];
                y_min = lo;
                y_max = hi;
                first = false;
            } else {
                x_min = std::min(x_min, s.x[i]);
                x_max = std::max(x_max, s.x[i]);
                y_min = std::min(y_min, lo);
                y_max = std::max(y_max, hi);
            }
        }
    }
    if (x_max <= x_min) x_max = x_min + 1.0;
    if (y_max <= y_min) y_max = y_min + 1.0;
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    const auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
    const auto py = [&](double y) { return mt + (1.0 - (y - y_min) / (y_max - y_min)) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    // Axes with five ticks each.
    svg << "<g stroke=\"#333\" stroke-width=\"1\">\n";
    svg << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt + ph) << "\" x2=\""
        << num(ml + pw) << "\" y2=\"" << num(mt + ph) << "\"/>\n";
    svg << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml)
        << "\" y2=\"" << num(mt + ph) << "\"/>\n";
    svg << "</g>\n";
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x_min + (x_max - x_min) * i / 4.0;
        const double fy = y_min + (y_max - y_min) * i / 4.0;
        svg << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << num(mt + ph) << "\" x2=\""
            << num(px(fx)) << "\" y2=\"" << num(mt + ph + 4) << "\" stroke=\"#333\"/>\n";
        svg << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(mt + ph + 17)
            << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
        svg << "<line x1=\"" << num(ml - 4) << "\" y1=\"" << num(py(fy)) << "\" x2=\""
            << num(ml) << "\" y2=\"" << num(py(fy)) << "\" stroke=\"#333\"/>\n";
        svg << "<text x=\"" << num(ml - 7) << "\" y=\"" << num(py(fy) + 4)
            << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
    }
    svg << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(height - 14)
        << "\" text-anchor=\"middle\">env_steps</text>\n";
    svg << "<text x=\"16\" y=\"" << num(mt + ph / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << num(mt + ph / 2)
        << ")\">mean_eval_return</text>\n";
    svg << "</g>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.x.empty()) continue;
        const char* color = kPalette[si % kPaletteSize];

        svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" "
            << "points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            svg << num(px(s.x[i])) << ',' << num(py(s.mean[i] + s.stddev[i])) << ' ';
        }
        for (std::size_t i = s.x.size(); i-- > 0;) {
            svg << num(px(s.x[i])) << ',' << num(py(s.mean[i] - s.stddev[i]));
            if (i > 0) svg << ' ';
        }
        svg << "\"/>\n";

        svg << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i > 0) svg << ' ';
            svg << num(px(s.x[i])) << ',' << num(py(s.mean[i]));
        }
        svg << "\"/>\n";
    }

    svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const double ly = mt + 8 + 18 * static_cast<double>(si);
        svg << "<rect x=\"" << num(ml + pw - 170) << "\" y=\"" << num(ly - 9)
            << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[si % kPaletteSize]
            << "\"/>\n";
        svg << "<text x=\"" << num(ml + pw - 153) << "\" y=\"" << num(ly + 2) << "\">"
            << series[si].label << "</text>\n";
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

}  // namespace hotgp
