#include "hotgp/metrics.hpp"

#include "hotgp/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace hotgp {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string metrics_row_csv(const MetricsRow& row) {
    std::ostringstream os;
    os << row.env_steps << ',' << format_double(row.mean_eval_return) << ','
       << format_double(row.eval_return_std) << ',' << format_double(row.model_nll) << ','
       << format_double(row.r_min) << ',' << format_double(row.wall_seconds);
    return os.str();
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write metrics file: " + path);
    out << kMetricsHeader << '\n';
    for (const auto& row : rows) out << metrics_row_csv(row) << '\n';
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) fields.push_back(field);
    return fields;
}

double parse_double(const std::string& s) {
    if (s == "nan") return std::nan("");
    return std::stod(s);
}

}  // namespace

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("metrics file not found: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("metrics file empty: " + path);
    if (line != kMetricsHeader) throw ConfigError("bad metrics header in " + path);

    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 6) throw ConfigError("bad metrics row in " + path);
        MetricsRow row;
        row.env_steps = std::stoll(f[0]);
        row.mean_eval_return = parse_double(f[1]);
        row.eval_return_std = parse_double(f[2]);
        row.model_nll = parse_double(f[3]);
        row.r_min = parse_double(f[4]);
        row.wall_seconds = parse_double(f[5]);
        rows.push_back(row);
    }
    return rows;
}

std::vector<AggregateRow> aggregate_metrics(
    const std::vector<std::vector<MetricsRow>>& runs) {
    if (runs.empty()) return {};

    // env_steps grid = intersection over runs, in ascending order.
    std::map<std::int64_t, int> counts;
    for (const auto& run : runs) {
        for (const auto& row : run) counts[row.env_steps] += 1;
    }
    std::vector<AggregateRow> out;
    for (const auto& [steps, count] : counts) {
        if (count != static_cast<int>(runs.size())) continue;
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& run : runs) {
            const auto it = std::find_if(run.begin(), run.end(), [&](const MetricsRow& r) {
                return r.env_steps == steps;
            });
            sum += it->mean_eval_return;
            sum_sq += it->mean_eval_return * it->mean_eval_return;
        }
        const double n = static_cast<double>(runs.size());
        AggregateRow agg;
        agg.env_steps = steps;
        agg.mean_eval_return = sum / n;
        agg.eval_return_std = std::sqrt(std::max(sum_sq / n - agg.mean_eval_return * agg.mean_eval_return, 0.0));
        agg.n_seeds = static_cast<int>(runs.size());
        out.push_back(agg);
    }
    return out;
}

void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write aggregate file: " + path);
    out << kAggregateHeader << '\n';
    for (const auto& row : rows) {
        out << row.env_steps << ',' << format_double(row.mean_eval_return) << ','
            << format_double(row.eval_return_std) << ',' << row.n_seeds << '\n';
    }
}

std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("aggregate file not found: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kAggregateHeader) {
        throw ConfigError("bad aggregate header in " + path);
    }
    std::vector<AggregateRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw ConfigError("bad aggregate row in " + path);
        AggregateRow row;
        row.env_steps = std::stoll(f[0]);
        row.mean_eval_return = parse_double(f[1]);
        row.eval_return_std = parse_double(f[2]);
        row.n_seeds = std::stoi(f[3]);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hotgp
