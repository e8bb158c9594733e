#include "modmon/ewma.hpp"

#include <cmath>

#include "modmon/errors.hpp"

namespace modmon {

namespace {
void validate_alpha(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw InvalidArgumentError("alpha must lie strictly in (0, 1)");
    }
}
}  // namespace

EwmaChart fit_phase1(const std::vector<double>& scores, double alpha) {
    validate_alpha(alpha);
    const std::size_t m = scores.size();
    if (m < 2) {
        throw InsufficientDataError("chart calibration needs at least two scores");
    }
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (double s : scores) ss += (s - mean) * (s - mean);
    const double sigma = std::sqrt(ss / static_cast<double>(m - 1));
    return EwmaChart{alpha, mean, sigma, mean};
}

double ewma_update(double z_prev, double score, double alpha) {
    validate_alpha(alpha);
    return alpha * score + (1.0 - alpha) * z_prev;
}

std::pair<double, double> control_limits(const EwmaChart& chart, int t) {
    validate_alpha(chart.alpha);
    if (t < 1) throw InvalidArgumentError("monitoring step must be >= 1");
    const double a = chart.alpha;
    const double spread = std::sqrt(a / (2.0 - a) *
                                    (1.0 - std::pow(1.0 - a, 2.0 * static_cast<double>(t))));
    const double half_width = 3.0 * chart.sigma_hat * spread;
    return {chart.mu_hat - half_width, chart.mu_hat + half_width};
}

MonitorResult monitor(const EwmaChart& chart, const std::vector<double>& phase2_scores) {
    validate_alpha(chart.alpha);
    MonitorResult result;
    result.z_series.reserve(phase2_scores.size());
    result.lower_limits.reserve(phase2_scores.size());
    result.upper_limits.reserve(phase2_scores.size());
    double z = chart.z0;
    for (std::size_t i = 0; i < phase2_scores.size(); ++i) {
        const int t = static_cast<int>(i) + 1;
        z = ewma_update(z, phase2_scores[i], chart.alpha);
        const auto [lower, upper] = control_limits(chart, t);
        result.z_series.push_back(z);
        result.lower_limits.push_back(lower);
        result.upper_limits.push_back(upper);
        if (z < lower || z > upper) {
            result.alarm_steps.push_back(t);
            if (!result.first_alarm) result.first_alarm = t;
        }
    }
    return result;
}

}  // namespace modmon
