#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "modmon/dcsbm.hpp"
#include "modmon/dmon.hpp"
#include "modmon/ewma.hpp"

namespace modmon {

struct ModelConfig {
    int hidden_dim = 64;
    int communities = 4;
};

struct ExperimentConfig {
    ScenarioSpec scenario;
    ModelConfig model;
    TrainConfig train;
    int replications = 100;
    double alpha = 0.2;
    std::uint64_t base_seed = 0;
    int parallelism = 1;
};

// Each replication owns a block of substream ids, so results are independent
// of scheduling and identical between serial and parallel runs.
enum class StreamPurpose : std::uint64_t { Generate = 0, Train = 1 };
inline constexpr std::uint64_t kStreamsPerReplication = 16;
std::uint64_t replication_stream(int replication_id, StreamPurpose purpose);

struct ReplicationRecord {
    int replication_id = 0;
    std::vector<double> phase1_scores;
    std::vector<double> phase2_scores;
    EwmaChart chart;
    MonitorResult monitoring;
    double train_seconds = 0.0;
    double total_seconds = 0.0;
};

struct ExperimentMetrics {
    int replications = 0;
    int phase2_len = 0;
    // Fraction of replications with at least one alarm.
    double detection_percentage = 0.0;
    // Mean first-alarm step over detecting replications only; empty when no
    // replication alarms.
    std::optional<double> conditional_expected_delay;
    // Mean over all replications of |alarm steps| / phase2_len.
    double avg_pct_over_threshold = 0.0;
    std::vector<ReplicationRecord> runs;
};

// Chart fit plus the degeneracy guard: Phase I scores with zero variance
// produce limits that sit exactly on the center line, so monitoring would be
// meaningless; reject them with NumericError instead.
EwmaChart calibrate_chart(const std::vector<double>& phase1_scores, double alpha);

// One end-to-end run: generate, train on Phase I, calibrate, monitor Phase II.
// Failures are rethrown with the replication id in the message.
ReplicationRecord run_replication(const ExperimentConfig& config, int replication_id);

ExperimentMetrics aggregate_metrics(std::vector<ReplicationRecord> runs, int phase2_len);

// All replications, optionally on a bounded worker pool. A failed replication
// aborts the whole experiment; when several fail, the lowest id wins so the
// error is deterministic.
ExperimentMetrics run_experiment(const ExperimentConfig& config);

// StructuralShift severity sweep over steps 1..max, where max closes the gap
// between the intra and inter rates. Shares base_seed across steps so the
// sweep is a common-random-numbers comparison.
std::vector<std::pair<int, ExperimentMetrics>> structural_grid(const ExperimentConfig& config);

// False-alarm run; requires scenario.change == None.
ExperimentMetrics no_change_experiment(const ExperimentConfig& config);

struct TuneGrid {
    std::vector<int> communities;
    std::vector<double> learning_rates;
    std::vector<double> dropout_rates;
};

struct TunePoint {
    ModelConfig model;
    TrainConfig train;
    double holdout_modularity = 0.0;
};

struct TuneResult {
    TunePoint best;
    DmonModel model;  // winner retrained on every Phase I snapshot
    EwmaChart chart;  // refit from the retrained winner's Phase I scores
    std::vector<double> phase1_scores;
    std::vector<TunePoint> table;  // grid walk in evaluation order
};

// Grid search over (communities, learning_rate, dropout_rate). The last
// Phase I snapshot is the holdout; candidates train on the rest and the one
// with the highest holdout modularity wins, first-seen winning ties so the
// result follows grid order. Empty grid axes fall back to the base value.
TuneResult tune_hyperparameters(const std::vector<AttributedSnapshot>& phase1,
                                const TuneGrid& grid, const ModelConfig& base_model,
                                const TrainConfig& base_train, double alpha,
                                std::uint64_t seed);

}  // namespace modmon
