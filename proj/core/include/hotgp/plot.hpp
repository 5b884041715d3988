#pragma once

#include <string>
#include <vector>

namespace hotgp {

struct CurveSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> stddev;
};

// Learning-curve SVG: per series one mean polyline plus a +-1 std band, axes
// env_steps vs mean_eval_return, legend from labels. Output is deterministic
// for fixed inputs. Series keep their own x grids; nothing is interpolated.
std::string render_learning_curves(const std::vector<CurveSeries>& series,
                                   int width = 860, int height = 520);

/// aggregate.csv when present, metrics.csv otherwise; label = directory name.
CurveSeries curve_from_run_dir(const std::string& dir);

}  // namespace hotgp
