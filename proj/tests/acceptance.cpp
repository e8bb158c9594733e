// Acceptance gate: prints one [PASS]/[FAIL] line per criterion with the
// pinned bounds inline, and exits nonzero if any criterion fails.
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "modmon/autodiff.hpp"
#include "modmon/dcsbm.hpp"
#include "modmon/dmon.hpp"
#include "modmon/errors.hpp"
#include "modmon/ewma.hpp"
#include "modmon/experiment.hpp"
#include "modmon/modularity.hpp"
#include "modmon/rng.hpp"
#include "modmon/snapshot.hpp"

namespace {

using namespace modmon;
namespace fs = std::filesystem;

constexpr double kDetectionFloorAbrupt = 0.95;
constexpr double kCedCeilingAbrupt = 2.0;
constexpr double kDetectionFloorDrift = 0.9;
constexpr double kFalseAlarmCeiling = 0.15;
constexpr int kMaxCedInversions = 1;
constexpr double kRegularizerTol = 1e-9;
constexpr double kOracleTol = 1e-10;
constexpr double kGradientTol = 1e-4;
constexpr double kChartTol = 1e-12;
constexpr double kChartConvergeTol = 1e-9;

bool g_all_pass = true;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n"
              << std::flush;
    if (!pass) g_all_pass = false;
}

std::string fmt(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

// Desk scale: n = 200, k = 4, s = 16, 20 + 20 snapshots, alpha = 0.2, one
// shared base seed so every change type sees the same Phase I draws.
ExperimentConfig desk_config(ChangeType change) {
    ExperimentConfig config;
    config.scenario.base = DcsbmConfig::balanced(200, 4, 18.0, 2.0);
    config.scenario.attribute_dim = 16;
    config.scenario.phase1_len = 20;
    config.scenario.phase2_len = 20;
    config.scenario.change = change;
    config.model.hidden_dim = 64;
    config.model.communities = 4;
    config.replications = 20;
    config.alpha = 0.2;
    config.base_seed = 42;
    config.parallelism = 1;
    return config;
}

double ced_or_inf(const ExperimentMetrics& metrics) {
    return metrics.conditional_expected_delay
               ? *metrics.conditional_expected_delay
               : std::numeric_limits<double>::infinity();
}

double run_abrupt_criterion(ChangeType change, const std::string& label) {
    const ExperimentMetrics metrics = run_experiment(desk_config(change));
    const double ced = ced_or_inf(metrics);
    const bool pass =
        metrics.detection_percentage >= kDetectionFloorAbrupt && ced <= kCedCeilingAbrupt;
    report("abrupt " + label, pass,
           "detection " + fmt(metrics.detection_percentage) + " (>= " +
               fmt(kDetectionFloorAbrupt) + "), ced " + fmt(ced) + " (<= " +
               fmt(kCedCeilingAbrupt) + ")");
    return ced;
}

void run_drift_criterion(double abrupt_ced_max) {
    const ExperimentMetrics metrics = run_experiment(desk_config(ChangeType::AttributeDrift));
    const double ced = ced_or_inf(metrics);
    const bool pass = metrics.detection_percentage >= kDetectionFloorDrift &&
                      std::isfinite(ced) && ced > abrupt_ced_max;
    report("attribute drift", pass,
           "detection " + fmt(metrics.detection_percentage) + " (>= " +
               fmt(kDetectionFloorDrift) + "), ced " + fmt(ced) +
               " (> abrupt max " + fmt(abrupt_ced_max) + ")");
}

void run_no_change_criterion() {
    const ExperimentMetrics metrics = no_change_experiment(desk_config(ChangeType::None));
    const bool pass = metrics.avg_pct_over_threshold <= kFalseAlarmCeiling &&
                      metrics.avg_pct_over_threshold >= 0.0;
    report("no-change false alarms", pass,
           "avg alarm fraction " + fmt(metrics.avg_pct_over_threshold) + " (<= " +
               fmt(kFalseAlarmCeiling) + ")");
}

void run_grid_criterion() {
    ExperimentConfig config = desk_config(ChangeType::None);
    config.replications = 10;
    const auto results = structural_grid(config);

    const double step8_detection = results.back().second.detection_percentage;
    int inversions = 0;
    std::vector<double> ceds;
    ceds.reserve(results.size());
    for (const auto& [step, metrics] : results) ceds.push_back(ced_or_inf(metrics));
    for (std::size_t i = 0; i + 1 < ceds.size(); ++i) {
        if (ceds[i] < ceds[i + 1]) ++inversions;
    }

    const bool pass = step8_detection == 1.0 && inversions <= kMaxCedInversions;
    std::string series;
    for (std::size_t i = 0; i < ceds.size(); ++i) {
        if (i > 0) series += " ";
        series += fmt(ceds[i]);
    }
    report("structural grid", pass,
           "step-8 detection " + fmt(step8_detection) + " (= 1), ced by step [" + series +
               "], inversions " + fmt(inversions) + " (<= " + fmt(kMaxCedInversions) + ")");
}

void run_regularizer_criterion() {
    double max_error = 0.0;
    auto track = [&](double got, double want) {
        max_error = std::max(max_error, std::abs(got - want));
    };
    for (int n = 2; n <= 50; ++n) {
        for (int k = 2; k <= 8; ++k) {
            const SoftAssignment uniform(
                Eigen::MatrixXd::Constant(n, k, 1.0 / static_cast<double>(k)));
            track(srco(uniform), std::sqrt(static_cast<double>(n)) - 1.0);
            track(collapse_regularizer(uniform), 0.0);

            Eigen::MatrixXd collapsed = Eigen::MatrixXd::Zero(n, k);
            collapsed.col(0).setOnes();
            track(collapse_regularizer(SoftAssignment(collapsed)),
                  std::sqrt(static_cast<double>(k)) - 1.0);

            if (n % k == 0) {
                Eigen::MatrixXd balanced = Eigen::MatrixXd::Zero(n, k);
                for (int i = 0; i < n; ++i) balanced(i, i / (n / k)) = 1.0;
                const SoftAssignment one_hot(balanced);
                track(srco(one_hot),
                      std::sqrt(static_cast<double>(n) / static_cast<double>(k)) - 1.0);
                track(collapse_regularizer(one_hot), 0.0);
            }
        }
    }
    report("regularizer closed forms", max_error <= kRegularizerTol,
           "max error " + fmt(max_error) + " (<= " + fmt(kRegularizerTol) +
               ") over n=2..50, k=2..8");
}

// Independent oracle: the ordered-pair sum including u == v, straight from the
// definition, with nothing shared with the library implementation.
double oracle_pairwise(const Eigen::MatrixXd& a, const std::vector<int>& labels) {
    const double two_w = a.sum();
    const Eigen::VectorXd d = a.rowwise().sum();
    double q = 0.0;
    for (Eigen::Index u = 0; u < a.rows(); ++u) {
        for (Eigen::Index v = 0; v < a.rows(); ++v) {
            if (labels[static_cast<std::size_t>(u)] == labels[static_cast<std::size_t>(v)]) {
                q += a(u, v) - d(u) * d(v) / two_w;
            }
        }
    }
    return q / two_w;
}

void run_oracle_criterion() {
    RngStream rng(991, 0);
    double max_pair_vs_trace = 0.0;
    double max_uniform = 0.0;
    for (int g = 0; g < 200; ++g) {
        const int n = 2 + static_cast<int>(rng.next_below(11));
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                if (rng.next_double() < 0.4) {
                    const double w = 1.0 + static_cast<double>(rng.next_below(3));
                    a(i, j) = w;
                    a(j, i) = w;
                }
            }
        }
        if (a.sum() == 0.0) {
            a(0, 1) = 1.0;
            a(1, 0) = 1.0;
        }
        const int k = 2 + static_cast<int>(rng.next_below(3));
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (auto& c : labels) c = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k)));

        const AttributedSnapshot snap(0, a, Eigen::MatrixXd::Zero(n, 1));
        Eigen::MatrixXd one_hot = Eigen::MatrixXd::Zero(n, k);
        for (int i = 0; i < n; ++i) one_hot(i, labels[static_cast<std::size_t>(i)]) = 1.0;

        const double pairwise = modularity_pairwise(snap, labels);
        const double trace = modularity_soft(snap, SoftAssignment(one_hot));
        const double reference = oracle_pairwise(a, labels);
        max_pair_vs_trace = std::max(max_pair_vs_trace, std::abs(pairwise - trace));
        max_pair_vs_trace = std::max(max_pair_vs_trace, std::abs(reference - trace));

        const SoftAssignment uniform(
            Eigen::MatrixXd::Constant(n, k, 1.0 / static_cast<double>(k)));
        max_uniform = std::max(max_uniform, std::abs(modularity_soft(snap, uniform)));
    }
    report("modularity oracle", max_pair_vs_trace <= kOracleTol && max_uniform <= kOracleTol,
           "max |pairwise - trace| " + fmt(max_pair_vs_trace) + ", max |uniform Q| " +
               fmt(max_uniform) + " (<= " + fmt(kOracleTol) + ") over 200 graphs");
}

Eigen::MatrixXd spread_matrix(int rows, int cols, RngStream& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
            m(i, j) = sign * (0.5 + rng.next_double());
        }
    }
    return m;
}

void run_gradient_criterion() {
    RngStream rng(992, 0);
    double max_error = 0.0;
    const RegularizerKind kinds[] = {RegularizerKind::Srco, RegularizerKind::Cr,
                                     RegularizerKind::None};
    for (int instance = 0; instance < 50; ++instance) {
        const int n = 6 + static_cast<int>(rng.next_below(4));
        const int s = 2 + static_cast<int>(rng.next_below(3));
        const int h = 3 + static_cast<int>(rng.next_below(3));
        const int k = 2 + static_cast<int>(rng.next_below(3));

        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (rng.next_double() < 0.5) {
                    const double w = 1.0 + static_cast<double>(rng.next_below(2));
                    a(i, j) = w;
                    a(j, i) = w;
                }
            }
        }
        if (a.sum() == 0.0) {
            a(0, 1) = 1.0;
            a(1, 0) = 1.0;
        }
        const Eigen::MatrixXd x = spread_matrix(n, s, rng);
        const AttributedSnapshot snap(0, a, x);
        const Eigen::MatrixXd propagated = normalized_adjacency(snap) * x;

        ParameterSet params;
        params.add("w_conv", 0.4 * spread_matrix(s, h, rng));
        params.add("w_skip", 0.4 * spread_matrix(s, h, rng));
        params.add("w_out", 0.4 * spread_matrix(h, k, rng));

        const LossProgram program =
            dmon_loss_program(a, x, propagated, kinds[instance % 3], 1.0);
        max_error = std::max(max_error, finite_difference_check(program, params, 1e-5));
    }
    report("gradient gate", max_error <= kGradientTol,
           "max relative error " + fmt(max_error) + " (<= " + fmt(kGradientTol) +
               ") over 50 instances");
}

void run_chart_criterion() {
    double max_closed_form = 0.0;

    // First-step limits sit at mu +- 3 sigma alpha.
    EwmaChart first;
    first.alpha = 0.25;
    first.mu_hat = 0.5;
    first.sigma_hat = 0.2;
    first.z0 = first.mu_hat;
    const auto [lo1, hi1] = control_limits(first, 1);
    max_closed_form = std::max(max_closed_form,
                               std::abs(hi1 - (0.5 + 3.0 * 0.2 * 0.25)));
    max_closed_form = std::max(max_closed_form,
                               std::abs(lo1 - (0.5 - 3.0 * 0.2 * 0.25)));

    // At alpha = 0.2 the asymptotic half-width is exactly sigma.
    EwmaChart asym;
    asym.alpha = 0.2;
    asym.mu_hat = 0.3;
    asym.sigma_hat = 0.07;
    asym.z0 = asym.mu_hat;
    const auto [lo_inf, hi_inf] = control_limits(asym, 100000);
    max_closed_form = std::max(max_closed_form, std::abs(hi_inf - 0.37));
    max_closed_form = std::max(max_closed_form, std::abs(lo_inf - 0.23));

    // Zero Phase I variance pins both limits to the center line.
    EwmaChart flat;
    flat.alpha = 0.3;
    flat.mu_hat = -1.25;
    flat.sigma_hat = 0.0;
    flat.z0 = flat.mu_hat;
    for (int t : {1, 7, 100}) {
        const auto [lo, hi] = control_limits(flat, t);
        max_closed_form = std::max(max_closed_form, std::abs(hi - flat.mu_hat));
        max_closed_form = std::max(max_closed_form, std::abs(lo - flat.mu_hat));
    }

    bool monotone = true;
    auto [prev_lo, prev_hi] = control_limits(asym, 1);
    for (int t = 2; t <= 200; ++t) {
        const auto [lo, hi] = control_limits(asym, t);
        if (hi < prev_hi || lo > prev_lo) monotone = false;
        prev_lo = lo;
        prev_hi = hi;
    }
    const auto [lo200, hi200] = control_limits(asym, 200);
    const double converge = std::max(std::abs(hi200 - 0.37), std::abs(lo200 - 0.23));

    const bool pass =
        max_closed_form <= kChartTol && monotone && converge <= kChartConvergeTol;
    report("chart arithmetic", pass,
           "closed-form error " + fmt(max_closed_form) + " (<= " + fmt(kChartTol) +
               "), monotone " + (monotone ? "yes" : "no") + ", t=200 asymptote error " +
               fmt(converge) + " (<= " + fmt(kChartConvergeTol) + ")");
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("modmon_acceptance_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

bool run_cli(const TempDir& dir, const std::string& args) {
    const std::string command = std::string(MODMON_CLI_PATH) + " " + args + " > " +
                                dir.file("stdout.txt") + " 2> " + dir.file("stderr.txt");
    const int status = std::system(command.c_str());
    return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void run_determinism_criterion() {
    // Library level: the same replication reruns bit for bit.
    ExperimentConfig small = desk_config(ChangeType::Split);
    small.scenario.base = DcsbmConfig::balanced(24, 2, 14.0, 2.0);
    small.scenario.attribute_dim = 4;
    small.scenario.phase1_len = 4;
    small.scenario.phase2_len = 3;
    small.model.hidden_dim = 8;
    small.model.communities = 2;
    small.train.epochs = 3;
    small.replications = 3;
    const ReplicationRecord once = run_replication(small, 0);
    const ReplicationRecord twice = run_replication(small, 0);
    const bool rerun_ok = once.phase1_scores == twice.phase1_scores &&
                          once.phase2_scores == twice.phase2_scores &&
                          once.monitoring.alarm_steps == twice.monitoring.alarm_steps;

    // Library level: a two-worker pool reproduces the serial metrics.
    const ExperimentMetrics serial = run_experiment(small);
    ExperimentConfig pooled = small;
    pooled.parallelism = 2;
    const ExperimentMetrics parallel = run_experiment(pooled);
    bool pool_ok =
        serial.detection_percentage == parallel.detection_percentage &&
        serial.conditional_expected_delay == parallel.conditional_expected_delay &&
        serial.avg_pct_over_threshold == parallel.avg_pct_over_threshold;
    for (std::size_t i = 0; pool_ok && i < serial.runs.size(); ++i) {
        pool_ok = serial.runs[i].phase1_scores == parallel.runs[i].phase1_scores &&
                  serial.runs[i].phase2_scores == parallel.runs[i].phase2_scores;
    }

    // File level: each pipeline command reruns byte-identically and parallel
    // simulate writes the same files as serial simulate.
    TempDir dir;
    std::ofstream config_out(dir.file("config.json"));
    config_out << R"({
      "scenario": {"n": 20, "communities": 2, "attribute_dim": 4,
                    "phase1_len": 3, "phase2_len": 2, "lambda_intra": 14.0,
                    "lambda_inter": 2.0, "change": "split"},
      "model": {"hidden_dim": 8, "communities": 2},
      "train": {"epochs": 2},
      "experiment": {"replications": 2, "base_seed": 5}
    })";
    config_out.close();
    const std::string config = " --config " + dir.file("config.json");

    bool files_ok = true;
    files_ok &= run_cli(dir, "generate" + config + " --out " + dir.file("a.ndjson"));
    files_ok &= run_cli(dir, "generate" + config + " --out " + dir.file("b.ndjson"));
    files_ok &= slurp(dir.file("a.ndjson")) == slurp(dir.file("b.ndjson"));

    files_ok &= run_cli(dir, "train" + config + " --network " + dir.file("a.ndjson") +
                                 " --out " + dir.file("m1.json"));
    files_ok &= run_cli(dir, "train" + config + " --network " + dir.file("a.ndjson") +
                                 " --out " + dir.file("m2.json"));
    files_ok &= slurp(dir.file("m1.json")) == slurp(dir.file("m2.json"));

    const std::string monitor_args = "monitor" + config + " --network " +
                                     dir.file("a.ndjson") + " --checkpoint " +
                                     dir.file("m1.json") + " --out ";
    files_ok &= run_cli(dir, monitor_args + dir.file("mon1"));
    files_ok &= run_cli(dir, monitor_args + dir.file("mon2"));
    files_ok &= slurp(dir.file("mon1.csv")) == slurp(dir.file("mon2.csv"));
    files_ok &= slurp(dir.file("mon1.svg")) == slurp(dir.file("mon2.svg"));

    files_ok &= run_cli(dir, "simulate" + config + " --out " + dir.file("ser"));
    files_ok &= run_cli(dir, "simulate" + config + " --parallel 2 --out " + dir.file("par"));
    files_ok &= slurp(dir.file("ser_metrics.csv")) == slurp(dir.file("par_metrics.csv"));
    files_ok &= slurp(dir.file("ser_runs.csv")) == slurp(dir.file("par_runs.csv"));

    report("determinism", rerun_ok && pool_ok && files_ok,
           std::string("replication rerun ") + (rerun_ok ? "bit-identical" : "DIFFERS") +
               ", parallel pool " + (pool_ok ? "equals serial" : "DIFFERS") +
               ", pipeline files " + (files_ok ? "byte-identical" : "DIFFER"));
}

}  // namespace

int main() {
    std::cout << "acceptance gate: desk scale n=200 k=4 s=16, 20+20 snapshots, N=20, "
                 "alpha=0.2\n"
              << std::flush;

    const double split_ced = run_abrupt_criterion(ChangeType::Split, "split");
    const double merge_ced = run_abrupt_criterion(ChangeType::Merge, "merge");
    const double fresh_ced = run_abrupt_criterion(ChangeType::NewCommunity, "new_community");
    run_drift_criterion(std::max({split_ced, merge_ced, fresh_ced}));
    run_no_change_criterion();
    run_grid_criterion();
    run_regularizer_criterion();
    run_oracle_criterion();
    run_gradient_criterion();
    run_chart_criterion();
    run_determinism_criterion();

    std::cout << (g_all_pass ? "acceptance: all criteria passed"
                             : "acceptance: FAILURES above")
              << "\n";
    return g_all_pass ? EXIT_SUCCESS : EXIT_FAILURE;
}
