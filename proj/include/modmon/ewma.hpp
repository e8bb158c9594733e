#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace modmon {

// Chart state estimated from in-control Phase I scores. The smoothed
// statistic starts at the Phase I mean.
struct EwmaChart {
    double alpha = 0.2;
    double mu_hat = 0.0;
    double sigma_hat = 0.0;
    double z0 = 0.0;
};

// Estimate mu and sigma (sample standard deviation, m - 1 denominator) from
// at least two Phase I scores. alpha must lie strictly in (0, 1).
EwmaChart fit_phase1(const std::vector<double>& scores, double alpha);

// One smoothing step: z_t = alpha * s_t + (1 - alpha) * z_{t-1}.
double ewma_update(double z_prev, double score, double alpha);

// Exact time-varying limits mu +- 3 sigma sqrt(alpha/(2-alpha) (1-(1-alpha)^{2t}))
// for monitoring step t >= 1 (t counts from the first Phase II snapshot).
std::pair<double, double> control_limits(const EwmaChart& chart, int t);

struct MonitorResult {
    std::vector<double> z_series;
    std::vector<double> lower_limits;
    std::vector<double> upper_limits;
    // 1-based monitoring steps whose statistic fell strictly outside the
    // limits; monitoring continues after the first alarm.
    std::vector<int> alarm_steps;
    std::optional<int> first_alarm;
};

// Run the chart over Phase II scores in order. Step numbering restarts at 1
// for the first Phase II snapshot.
MonitorResult monitor(const EwmaChart& chart, const std::vector<double>& phase2_scores);

}  // namespace modmon
