#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "modmon/dmon.hpp"
#include "modmon/ewma.hpp"
#include "modmon/experiment.hpp"
#include "modmon/snapshot.hpp"

namespace modmon {

// All writers stage to "<path>.partial" and rename on success, so a crash
// never leaves a truncated file under the final name.
void write_text_atomic(const std::string& path, const std::string& content);

// Shortest round-trip decimal form (std::to_chars), used everywhere a double
// lands in a text file so reruns are byte-identical.
std::string format_double(double value);

// Network files are newline-delimited JSON: a header object, then one object
// per snapshot with edges stored once as [u, v, weight] with u <= v.
void write_network(const DynamicNetwork& network, const std::string& path,
                   const nlohmann::json& metadata = nlohmann::json::object());
DynamicNetwork read_network(const std::string& path);

// Whitespace-separated attribute matrix with a one-line header declaring
// dimensions; load checks them against the expected shape.
void write_attribute_matrix(const Eigen::MatrixXd& attributes, const std::string& path);
Eigen::MatrixXd load_attribute_matrix(const std::string& path, Eigen::Index expected_rows,
                                      Eigen::Index expected_cols);

struct Checkpoint {
    DmonModel model;
    TrainConfig train;
};

// Model weights plus the exact training settings, as one JSON document with
// sorted keys; rewriting an unchanged checkpoint reproduces it byte for byte.
void write_checkpoint(const DmonModel& model, const TrainConfig& train,
                      const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

// Chart series as CSV: Phase I scores first, then the monitored Phase II
// steps with statistic, limits and alarm flag.
void write_monitor_csv(const std::vector<double>& phase1_scores,
                       const std::vector<double>& phase2_scores,
                       const MonitorResult& result, const std::string& path);

// Standalone SVG rendering of the same series: Phase I scores, the smoothed
// statistic, control limits, center line and alarm markers.
void render_control_chart(const std::vector<double>& phase1_scores,
                          const std::vector<double>& phase2_scores,
                          const MonitorResult& result, const EwmaChart& chart,
                          const std::string& path);

// Experiment outputs. A row labels one experiment (grid sweeps emit one row
// per severity step). Timings stay out of these files on purpose: they are
// the only nondeterministic fields in a replication record.
struct MetricsRow {
    std::string label;
    std::optional<int> step;
    const ExperimentMetrics* metrics = nullptr;
};
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);
void write_runs_csv(const std::vector<MetricsRow>& rows, const std::string& path);

// Generic single-column series (per-epoch training loss and the like).
void write_series_csv(const std::string& column_name, const std::vector<double>& values,
                      const std::string& path);

}  // namespace modmon
