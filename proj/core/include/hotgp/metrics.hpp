#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hotgp {

struct MetricsRow {
    std::int64_t env_steps = 0;
    double mean_eval_return = 0.0;
    double eval_return_std = 0.0;
    double model_nll = 0.0;  // NaN before the model has scored held-out data
    double r_min = 0.0;
    double wall_seconds = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "env_steps,mean_eval_return,eval_return_std,model_nll,r_min,wall_seconds";

/// Shortest representation that parses back to the same double; locale-free.
std::string format_double(double v);

std::string metrics_row_csv(const MetricsRow& row);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

struct AggregateRow {
    std::int64_t env_steps = 0;
    double mean_eval_return = 0.0;
    double eval_return_std = 0.0;  // across seeds
    int n_seeds = 0;
};

inline constexpr const char* kAggregateHeader =
    "env_steps,mean_eval_return,eval_return_std,n_seeds";

// Per-step mean/std across seeds, aligned on env_steps values present in
// every run (no interpolation).
std::vector<AggregateRow> aggregate_metrics(const std::vector<std::vector<MetricsRow>>& runs);
void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows);
std::vector<AggregateRow> read_aggregate_csv(const std::string& path);

}  // namespace hotgp
