#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modmon/config.hpp"
#include "modmon/dcsbm.hpp"
#include "modmon/dmon.hpp"
#include "modmon/errors.hpp"
#include "modmon/ewma.hpp"
#include "modmon/experiment.hpp"
#include "modmon/io.hpp"
#include "modmon/names.hpp"

namespace {

using namespace modmon;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<int> parallel;
};

CliConfig resolve_config(const CommonFlags& flags) {
    CliConfig config =
        flags.config_path.empty() ? CliConfig::defaults() : load_config_file(flags.config_path);
    if (flags.seed) {
        config.base_seed = *flags.seed;
        config.train.seed = *flags.seed;
    }
    if (flags.alpha) config.alpha = *flags.alpha;
    if (flags.parallel) config.parallelism = *flags.parallel;
    return config;
}

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "base seed (overrides the config)");
    cmd->add_option("--alpha", flags.alpha, "chart smoothing weight in (0,1)")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9));
    cmd->add_option("--parallel", flags.parallel, "worker threads for simulate")
        ->check(CLI::Range(1, 4096));
}

// Phase I is everything before the changepoint; an unchanged network is all
// Phase I. An explicit override wins.
std::vector<AttributedSnapshot> phase1_slice(const DynamicNetwork& net,
                                             std::optional<int> phase1_len) {
    int len = static_cast<int>(net.size());
    if (phase1_len) {
        len = *phase1_len;
    } else if (net.changepoint()) {
        len = *net.changepoint();
    }
    if (len < 1 || len > static_cast<int>(net.size())) {
        throw InvalidArgumentError("phase-one length out of range");
    }
    return {net.snapshots().begin(), net.snapshots().begin() + len};
}

std::string metrics_line(const std::string& label, const ExperimentMetrics& m) {
    std::ostringstream out;
    out << label << ": detection " << format_double(m.detection_percentage * 100.0)
        << "% of " << m.replications << " runs";
    if (m.conditional_expected_delay) {
        out << ", mean first alarm step " << format_double(*m.conditional_expected_delay);
    } else {
        out << ", no alarms";
    }
    out << ", alarm fraction " << format_double(m.avg_pct_over_threshold);
    return out.str();
}

int cmd_generate(const CommonFlags& flags, const std::string& out_path,
                 const std::string& change_override) {
    CliConfig config = resolve_config(flags);
    if (!change_override.empty()) config.scenario.change = parse_change(change_override);
    RngStream rng(config.base_seed, replication_stream(0, StreamPurpose::Generate));
    const DynamicNetwork net = generate_dynamic_network(config.scenario, rng);

    nlohmann::json metadata;
    metadata["seed"] = config.base_seed;
    metadata["change"] = change_name(config.scenario.change);
    metadata["n"] = config.scenario.base.n;
    metadata["communities"] = config.scenario.base.k;
    write_network(net, out_path, metadata);

    std::cout << "wrote " << net.size() << " snapshots (change "
              << change_name(config.scenario.change) << ", seed " << config.base_seed
              << ") to " << out_path << "\n";
    return kExitOk;
}

int cmd_train(const CommonFlags& flags, const std::string& network_path,
              const std::string& out_path, const std::string& trace_path,
              std::optional<int> phase1_len) {
    CliConfig config = resolve_config(flags);
    const DynamicNetwork net = read_network(network_path);
    const std::vector<AttributedSnapshot> phase1 = phase1_slice(net, phase1_len);

    RngStream rng(config.train.seed, replication_stream(0, StreamPurpose::Train));
    DmonModel init = DmonModel::glorot(net.attribute_dim(), config.model.hidden_dim,
                                       config.model.communities, rng);
    TrainResult trained = train_phase1(std::move(init), phase1, config.train, rng);
    write_checkpoint(trained.model, config.train, out_path);
    if (!trace_path.empty()) write_series_csv("mean_loss", trained.epoch_losses, trace_path);

    std::cout << "trained on " << phase1.size() << " snapshots for "
              << config.train.epochs << " epochs";
    if (!trained.epoch_losses.empty()) {
        std::cout << ", final mean loss " << format_double(trained.epoch_losses.back());
    }
    std::cout << "; checkpoint " << out_path << "\n";
    return kExitOk;
}

int cmd_monitor(const CommonFlags& flags, const std::string& network_path,
                const std::string& checkpoint_path, const std::string& out_prefix,
                std::optional<int> phase1_len) {
    CliConfig config = resolve_config(flags);
    const DynamicNetwork net = read_network(network_path);
    const Checkpoint checkpoint = read_checkpoint(checkpoint_path);

    if (!phase1_len && !net.changepoint()) {
        throw InvalidArgumentError(
            "network has no changepoint; pass --phase1-len to split the series");
    }
    const std::vector<AttributedSnapshot> phase1 = phase1_slice(net, phase1_len);
    std::vector<double> phase1_scores;
    phase1_scores.reserve(phase1.size());
    for (const auto& snap : phase1) {
        phase1_scores.push_back(score(checkpoint.model, snap));
    }
    std::vector<double> phase2_scores;
    for (std::size_t i = phase1.size(); i < net.size(); ++i) {
        phase2_scores.push_back(score(checkpoint.model, net.snapshots()[i]));
    }

    const EwmaChart chart = fit_phase1(phase1_scores, config.alpha);
    const MonitorResult result = monitor(chart, phase2_scores);
    write_monitor_csv(phase1_scores, phase2_scores, result, out_prefix + ".csv");
    render_control_chart(phase1_scores, phase2_scores, result, chart, out_prefix + ".svg");

    if (result.first_alarm) {
        std::cout << "first alarm at monitoring step " << *result.first_alarm << " ("
                  << result.alarm_steps.size() << " alarmed of " << phase2_scores.size()
                  << " steps)\n";
    } else {
        std::cout << "no alarms over " << phase2_scores.size() << " monitored steps\n";
    }
    std::cout << "series " << out_prefix << ".csv, chart " << out_prefix << ".svg\n";
    return kExitOk;
}

int cmd_simulate(const CommonFlags& flags, std::optional<int> replications, bool grid,
                 const std::string& out_prefix) {
    CliConfig config = resolve_config(flags);
    if (replications) config.replications = *replications;
    ExperimentConfig experiment = config.experiment();

    std::vector<std::pair<int, ExperimentMetrics>> grid_results;
    ExperimentMetrics single;
    std::vector<MetricsRow> rows;
    if (grid) {
        grid_results = structural_grid(experiment);
        for (const auto& [step, metrics] : grid_results) {
            rows.push_back({change_name(ChangeType::StructuralShift), step, &metrics});
        }
    } else {
        single = experiment.scenario.change == ChangeType::None
                     ? no_change_experiment(experiment)
                     : run_experiment(experiment);
        rows.push_back({change_name(experiment.scenario.change), std::nullopt, &single});
    }

    write_metrics_csv(rows, out_prefix + "_metrics.csv");
    write_runs_csv(rows, out_prefix + "_runs.csv");
    for (const auto& row : rows) {
        std::string label = row.label;
        if (row.step) label += " step " + std::to_string(*row.step);
        std::cout << metrics_line(label, *row.metrics) << "\n";
    }
    std::cout << "metrics " << out_prefix << "_metrics.csv, runs " << out_prefix
              << "_runs.csv\n";
    return kExitOk;
}

int cmd_tune(const CommonFlags& flags, const std::string& network_path,
             const std::string& out_prefix, std::optional<int> phase1_len) {
    CliConfig config = resolve_config(flags);
    const DynamicNetwork net = read_network(network_path);
    const std::vector<AttributedSnapshot> phase1 = phase1_slice(net, phase1_len);

    const TuneResult result = tune_hyperparameters(phase1, config.tune, config.model,
                                                   config.train, config.alpha,
                                                   config.base_seed);
    write_checkpoint(result.model, result.best.train, out_prefix + "_checkpoint.json");

    std::ostringstream table;
    table << "communities,learning_rate,dropout_rate,holdout_modularity\n";
    for (const auto& point : result.table) {
        table << point.model.communities << ',' << format_double(point.train.learning_rate)
              << ',' << format_double(point.train.dropout_rate) << ','
              << format_double(point.holdout_modularity) << '\n';
    }
    write_text_atomic(out_prefix + "_table.csv", table.str());

    std::cout << "best: communities " << result.best.model.communities
              << ", learning rate " << format_double(result.best.train.learning_rate)
              << ", dropout " << format_double(result.best.train.dropout_rate)
              << ", holdout modularity "
              << format_double(result.best.holdout_modularity) << "\n";
    std::cout << "checkpoint " << out_prefix << "_checkpoint.json, table " << out_prefix
              << "_table.csv\n";
    return kExitOk;
}

// Rebuilds the plotted series from a monitor CSV. The center line is the
// midpoint of the limits, which is exact for this chart.
int cmd_chart(const std::string& series_path, const std::string& out_path) {
    std::ifstream in(series_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + series_path);
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ParseError(series_path + ": empty file");
    ++lineno;
    if (line != "segment,t,score,z,lower,upper,alarm") {
        throw ParseError(series_path + ":1: unexpected header");
    }
    std::vector<double> phase1_scores;
    std::vector<double> phase2_scores;
    MonitorResult result;
    EwmaChart chart;
    bool have_center = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        while (cells.size() < 7) cells.emplace_back();
        const std::string where = series_path + ":" + std::to_string(lineno);
        auto num = [&](const std::string& text) {
            try {
                std::size_t used = 0;
                const double v = std::stod(text, &used);
                if (used != text.size()) throw std::invalid_argument(text);
                return v;
            } catch (const std::exception&) {
                throw ParseError(where + ": expected a number, got '" + text + "'");
            }
        };
        if (cells[0] == "phase1") {
            phase1_scores.push_back(num(cells[2]));
        } else if (cells[0] == "phase2") {
            phase2_scores.push_back(num(cells[2]));
            result.z_series.push_back(num(cells[3]));
            result.lower_limits.push_back(num(cells[4]));
            result.upper_limits.push_back(num(cells[5]));
            const int step = static_cast<int>(result.z_series.size());
            if (num(cells[6]) != 0.0) {
                result.alarm_steps.push_back(step);
                if (!result.first_alarm) result.first_alarm = step;
            }
            if (!have_center) {
                chart.mu_hat = (result.lower_limits.back() + result.upper_limits.back()) / 2.0;
                chart.z0 = chart.mu_hat;
                have_center = true;
            }
        } else {
            throw ParseError(where + ": unknown segment '" + cells[0] + "'");
        }
    }
    if (phase1_scores.empty() && phase2_scores.empty()) {
        throw ParseError(series_path + ": no series rows");
    }
    if (!have_center && !phase1_scores.empty()) {
        double mean = 0.0;
        for (double s : phase1_scores) mean += s;
        chart.mu_hat = mean / static_cast<double>(phase1_scores.size());
        chart.z0 = chart.mu_hat;
    }
    render_control_chart(phase1_scores, phase2_scores, result, chart, out_path);
    std::cout << "chart " << out_path << "\n";
    return kExitOk;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const EmptyGraphError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"modularity-based changepoint monitoring for attributed dynamic graphs"};
    app.require_subcommand(1);

    CommonFlags generate_flags, train_flags, monitor_flags, simulate_flags, tune_flags;
    std::string generate_out, generate_change;
    std::string train_network, train_out, train_trace;
    std::optional<int> train_phase1_len;
    std::string monitor_network, monitor_checkpoint, monitor_out;
    std::optional<int> monitor_phase1_len;
    std::optional<int> simulate_replications;
    bool simulate_grid = false;
    std::string simulate_out;
    std::string tune_network, tune_out;
    std::optional<int> tune_phase1_len;
    std::string chart_series, chart_out;

    CLI::App* generate = app.add_subcommand("generate", "sample a synthetic dynamic network");
    add_common_flags(generate, generate_flags);
    generate->add_option("--out", generate_out, "output network file")->required();
    generate->add_option("--change", generate_change, "override the scenario change type")
        ->check(CLI::IsMember({"none", "split", "merge", "new_community",
                               "attribute_drift", "structural_shift"}));

    CLI::App* train = app.add_subcommand("train", "train the partitioning model on phase one");
    add_common_flags(train, train_flags);
    train->add_option("--network", train_network, "input network file")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("--out", train_out, "output checkpoint file")->required();
    train->add_option("--trace", train_trace, "optional per-epoch loss CSV");
    train->add_option("--phase1-len", train_phase1_len,
                      "train on the first N snapshots (default: up to the changepoint)")
        ->check(CLI::PositiveNumber);

    CLI::App* monitor_cmd = app.add_subcommand("monitor", "score snapshots and run the chart");
    add_common_flags(monitor_cmd, monitor_flags);
    monitor_cmd->add_option("--network", monitor_network, "input network file")
        ->required()
        ->check(CLI::ExistingFile);
    monitor_cmd->add_option("--checkpoint", monitor_checkpoint, "trained model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    monitor_cmd->add_option("--out", monitor_out, "output prefix for .csv and .svg")
        ->required();
    monitor_cmd
        ->add_option("--phase1-len", monitor_phase1_len,
                     "calibrate on the first N snapshots (default: up to the changepoint)")
        ->check(CLI::PositiveNumber);

    CLI::App* simulate = app.add_subcommand("simulate", "run a replicated experiment");
    add_common_flags(simulate, simulate_flags);
    simulate->add_option("--replications", simulate_replications, "number of replications")
        ->check(CLI::PositiveNumber);
    simulate->add_flag("--grid", simulate_grid, "sweep structural shift severities");
    simulate->add_option("--out", simulate_out, "output prefix for metrics CSVs")->required();

    CLI::App* tune = app.add_subcommand("tune", "grid-search hyperparameters on phase one");
    add_common_flags(tune, tune_flags);
    tune->add_option("--network", tune_network, "input network file")
        ->required()
        ->check(CLI::ExistingFile);
    tune->add_option("--out", tune_out, "output prefix for checkpoint and table")->required();
    tune->add_option("--phase1-len", tune_phase1_len,
                     "tune on the first N snapshots (default: up to the changepoint)")
        ->check(CLI::PositiveNumber);

    CLI::App* chart = app.add_subcommand("chart", "render a chart from a monitor CSV");
    chart->add_option("--series", chart_series, "monitor series CSV")
        ->required()
        ->check(CLI::ExistingFile);
    chart->add_option("--out", chart_out, "output SVG file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (generate->parsed()) {
        return guarded([&] { return cmd_generate(generate_flags, generate_out, generate_change); });
    }
    if (train->parsed()) {
        return guarded([&] {
            return cmd_train(train_flags, train_network, train_out, train_trace,
                             train_phase1_len);
        });
    }
    if (monitor_cmd->parsed()) {
        return guarded([&] {
            return cmd_monitor(monitor_flags, monitor_network, monitor_checkpoint,
                               monitor_out, monitor_phase1_len);
        });
    }
    if (simulate->parsed()) {
        return guarded([&] {
            return cmd_simulate(simulate_flags, simulate_replications, simulate_grid,
                                simulate_out);
        });
    }
    if (tune->parsed()) {
        return guarded([&] { return cmd_tune(tune_flags, tune_network, tune_out, tune_phase1_len); });
    }
    if (chart->parsed()) {
        return guarded([&] { return cmd_chart(chart_series, chart_out); });
    }
    return kExitUsage;
}
