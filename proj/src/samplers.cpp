#include "modmon/samplers.hpp"

#include <cmath>

#include "modmon/errors.hpp"

namespace modmon {

std::pair<double, double> standard_normal_pair(RngStream& rng) {
    const double u1 = rng.next_double();
    const double u2 = rng.next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
}

Eigen::VectorXd sample_gaussian_vector(const Eigen::VectorXd& mean,
                                       double variance_scale, RngStream& rng) {
    if (!(variance_scale > 0.0)) {
        throw InvalidArgumentError("sample_gaussian_vector: variance_scale must be > 0");
    }
    const double sd = std::sqrt(variance_scale);
    Eigen::VectorXd out(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); i += 2) {
        auto [z0, z1] = standard_normal_pair(rng);
        out[i] = mean[i] + sd * z0;
        if (i + 1 < mean.size()) out[i + 1] = mean[i + 1] + sd * z1;
    }
    return out;
}

namespace {

double log_gamma(double x) {
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

std::uint64_t poisson_by_inversion(double mean, RngStream& rng) {
    const double floor_prob = std::exp(-mean);
    std::uint64_t count = 0;
    double prod = 1.0;
    while (true) {
        prod *= rng.next_double();
        if (prod <= floor_prob) return count;
        ++count;
    }
}

// Hormann's transformed rejection with squeeze (PTRS), valid for mean >= 10.
std::uint64_t poisson_by_ptrs(double mean, RngStream& rng) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
        const double u = rng.next_double() - 0.5;
        const double v = rng.next_double();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            k * loglam - mean - log_gamma(k + 1.0)) {
            return static_cast<std::uint64_t>(k);
        }
    }
}

}  // namespace

std::uint64_t sample_poisson(double mean, RngStream& rng) {
    if (mean < 0.0) throw InvalidArgumentError("sample_poisson: mean must be >= 0");
    if (mean == 0.0) return 0;
    if (mean < 10.0) return poisson_by_inversion(mean, rng);
    return poisson_by_ptrs(mean, rng);
}

double sample_bounded_power_law(double lower, double upper, double exponent,
                                RngStream& rng) {
    if (!(0.0 < lower && lower < upper)) {
        throw InvalidArgumentError("sample_bounded_power_law: need 0 < lower < upper");
    }
    const double p = rng.next_double();
    if (exponent == 1.0) {
        return lower * std::pow(upper / lower, p);
    }
    const double g = 1.0 - exponent;
    const double lo = std::pow(lower, g);
    const double hi = std::pow(upper, g);
    return std::pow(lo + p * (hi - lo), 1.0 / g);
}

double bounded_power_law_cdf(double x, double lower, double upper,
                             double exponent) {
    if (x <= lower) return 0.0;
    if (x >= upper) return 1.0;
    if (exponent == 1.0) {
        return std::log(x / lower) / std::log(upper / lower);
    }
    const double g = 1.0 - exponent;
    return (std::pow(x, g) - std::pow(lower, g)) /
           (std::pow(upper, g) - std::pow(lower, g));
}

}  // namespace modmon
