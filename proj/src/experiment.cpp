#include "modmon/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "modmon/errors.hpp"

namespace modmon {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::uint64_t replication_stream(int replication_id, StreamPurpose purpose) {
    if (replication_id < 0) throw InvalidArgumentError("replication_id must be >= 0");
    return static_cast<std::uint64_t>(replication_id) * kStreamsPerReplication +
           static_cast<std::uint64_t>(purpose);
}

EwmaChart calibrate_chart(const std::vector<double>& phase1_scores, double alpha) {
    EwmaChart chart = fit_phase1(phase1_scores, alpha);
    if (!(chart.sigma_hat > 0.0)) {
        throw NumericError("phase-one scores have zero variance");
    }
    return chart;
}

ReplicationRecord run_replication(const ExperimentConfig& config, int replication_id) {
    const auto start = std::chrono::steady_clock::now();
    config.scenario.validate();
    const std::string tag = "replication " + std::to_string(replication_id);

    try {
        RngStream gen_rng(config.base_seed,
                          replication_stream(replication_id, StreamPurpose::Generate));
        const DynamicNetwork net = generate_dynamic_network(config.scenario, gen_rng);
        const auto& snaps = net.snapshots();
        const std::size_t phase1_len = static_cast<std::size_t>(config.scenario.phase1_len);
        const std::vector<AttributedSnapshot> phase1(snaps.begin(),
                                                     snaps.begin() + phase1_len);

        RngStream train_rng(config.base_seed,
                            replication_stream(replication_id, StreamPurpose::Train));
        DmonModel init = DmonModel::glorot(config.scenario.attribute_dim,
                                           config.model.hidden_dim,
                                           config.model.communities, train_rng);
        TrainConfig train_config = config.train;
        train_config.seed = config.base_seed;

        const auto train_start = std::chrono::steady_clock::now();
        TrainResult trained = train_phase1(std::move(init), phase1, train_config, train_rng);

        ReplicationRecord record;
        record.replication_id = replication_id;
        record.train_seconds = seconds_since(train_start);
        record.phase1_scores.reserve(phase1.size());
        for (const auto& snap : phase1) {
            record.phase1_scores.push_back(score(trained.model, snap));
        }
        record.chart = calibrate_chart(record.phase1_scores, config.alpha);
        record.phase2_scores.reserve(snaps.size() - phase1.size());
        for (std::size_t i = phase1.size(); i < snaps.size(); ++i) {
            record.phase2_scores.push_back(score(trained.model, snaps[i]));
        }
        record.monitoring = monitor(record.chart, record.phase2_scores);
        record.total_seconds = seconds_since(start);
        return record;
    } catch (const NumericError& e) {
        throw NumericError(tag + ": " + e.what());
    } catch (const EmptyGraphError& e) {
        throw EmptyGraphError(tag + ": " + e.what());
    }
}

ExperimentMetrics aggregate_metrics(std::vector<ReplicationRecord> runs, int phase2_len) {
    if (runs.empty()) throw InvalidArgumentError("metrics need at least one replication");
    if (phase2_len < 0) throw InvalidArgumentError("phase2_len must be >= 0");
    ExperimentMetrics metrics;
    metrics.replications = static_cast<int>(runs.size());
    metrics.phase2_len = phase2_len;

    int detecting = 0;
    double delay_sum = 0.0;
    double pct_sum = 0.0;
    for (const auto& run : runs) {
        if (run.monitoring.first_alarm) {
            ++detecting;
            delay_sum += static_cast<double>(*run.monitoring.first_alarm);
        }
        if (phase2_len > 0) {
            pct_sum += static_cast<double>(run.monitoring.alarm_steps.size()) /
                       static_cast<double>(phase2_len);
        }
    }
    metrics.detection_percentage =
        static_cast<double>(detecting) / static_cast<double>(runs.size());
    if (detecting > 0) {
        metrics.conditional_expected_delay = delay_sum / static_cast<double>(detecting);
    }
    metrics.avg_pct_over_threshold = pct_sum / static_cast<double>(runs.size());
    metrics.runs = std::move(runs);
    return metrics;
}

ExperimentMetrics run_experiment(const ExperimentConfig& config) {
    if (config.replications < 1) throw InvalidArgumentError("replications must be >= 1");
    if (config.parallelism < 1) throw InvalidArgumentError("parallelism must be >= 1");
    config.scenario.validate();

    const int n = config.replications;
    std::vector<std::optional<ReplicationRecord>> slots(static_cast<std::size_t>(n));
    const int workers = std::min(config.parallelism, n);
    if (workers == 1) {
        for (int r = 0; r < n; ++r) slots[static_cast<std::size_t>(r)] = run_replication(config, r);
    } else {
        std::atomic<int> next{0};
        std::mutex error_mutex;
        std::exception_ptr first_error;
        int first_error_id = n;
        auto work = [&] {
            while (true) {
                const int r = next.fetch_add(1);
                if (r >= n) return;
                try {
                    slots[static_cast<std::size_t>(r)] = run_replication(config, r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (r < first_error_id) {
                        first_error_id = r;
                        first_error = std::current_exception();
                    }
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    std::vector<ReplicationRecord> runs;
    runs.reserve(static_cast<std::size_t>(n));
    for (auto& slot : slots) runs.push_back(std::move(*slot));
    return aggregate_metrics(std::move(runs), config.scenario.phase2_len);
}

std::vector<std::pair<int, ExperimentMetrics>> structural_grid(const ExperimentConfig& config) {
    const Eigen::MatrixXd& lambda = config.scenario.base.lambda;
    if (lambda.rows() < 2) {
        throw InvalidArgumentError("structural sweep needs at least two communities");
    }
    const double intra = lambda(0, 0);
    const double inter = lambda(0, 1);
    const int max_step = static_cast<int>(std::floor((intra - inter) / 2.0));
    if (max_step < 1) {
        throw InvalidArgumentError("structural sweep needs intra - inter >= 2");
    }
    std::vector<std::pair<int, ExperimentMetrics>> results;
    results.reserve(static_cast<std::size_t>(max_step));
    for (int step = 1; step <= max_step; ++step) {
        ExperimentConfig step_config = config;
        step_config.scenario.change = ChangeType::StructuralShift;
        step_config.scenario.shift_step = step;
        results.emplace_back(step, run_experiment(step_config));
    }
    return results;
}

ExperimentMetrics no_change_experiment(const ExperimentConfig& config) {
    if (config.scenario.change != ChangeType::None) {
        throw InvalidArgumentError("false-alarm experiment requires change == None");
    }
    return run_experiment(config);
}

TuneResult tune_hyperparameters(const std::vector<AttributedSnapshot>& phase1,
                                const TuneGrid& grid, const ModelConfig& base_model,
                                const TrainConfig& base_train, double alpha,
                                std::uint64_t seed) {
    if (phase1.size() < 2) {
        throw InsufficientDataError("tuning needs at least two phase-one snapshots");
    }
    const std::vector<AttributedSnapshot> train_set(phase1.begin(), phase1.end() - 1);
    const AttributedSnapshot& holdout = phase1.back();
    const int attribute_dim = static_cast<int>(phase1.front().attribute_dim());

    std::vector<int> ks = grid.communities;
    if (ks.empty()) ks.push_back(base_model.communities);
    std::vector<double> lrs = grid.learning_rates;
    if (lrs.empty()) lrs.push_back(base_train.learning_rate);
    std::vector<double> drs = grid.dropout_rates;
    if (drs.empty()) drs.push_back(base_train.dropout_rate);

    std::vector<TunePoint> table;
    table.reserve(ks.size() * lrs.size() * drs.size());
    int best_index = -1;
    std::uint64_t stream = 0;
    for (int k : ks) {
        for (double lr : lrs) {
            for (double dr : drs) {
                TunePoint point;
                point.model = base_model;
                point.model.communities = k;
                point.train = base_train;
                point.train.learning_rate = lr;
                point.train.dropout_rate = dr;
                point.train.seed = seed;

                RngStream rng(seed, stream++);
                DmonModel init = DmonModel::glorot(attribute_dim, point.model.hidden_dim,
                                                   k, rng);
                TrainResult trained =
                    train_phase1(std::move(init), train_set, point.train, rng);
                point.holdout_modularity = score(trained.model, holdout);
                table.push_back(point);
                if (best_index < 0 ||
                    point.holdout_modularity > table[static_cast<std::size_t>(best_index)]
                                                   .holdout_modularity) {
                    best_index = static_cast<int>(table.size()) - 1;
                }
            }
        }
    }

    const TunePoint& best = table[static_cast<std::size_t>(best_index)];
    RngStream final_rng(seed, stream);
    DmonModel final_init = DmonModel::glorot(attribute_dim, best.model.hidden_dim,
                                             best.model.communities, final_rng);
    TrainResult final_trained =
        train_phase1(std::move(final_init), phase1, best.train, final_rng);

    std::vector<double> phase1_scores;
    phase1_scores.reserve(phase1.size());
    for (const auto& snap : phase1) {
        phase1_scores.push_back(score(final_trained.model, snap));
    }
    EwmaChart chart = fit_phase1(phase1_scores, alpha);
    return TuneResult{best, std::move(final_trained.model), chart,
                      std::move(phase1_scores), std::move(table)};
}

}  // namespace modmon
