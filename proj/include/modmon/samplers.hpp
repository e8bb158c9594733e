#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "modmon/rng.hpp"

namespace modmon {

// One pair of independent standard normals (Box-Muller). Consumes exactly two
// uniform draws, which keeps the stream layout easy to reason about.
std::pair<double, double> standard_normal_pair(RngStream& rng);

// Entries i.i.d. Normal(mean_i, variance_scale). variance_scale is a
// variance, not a standard deviation. Throws InvalidArgumentError if
// variance_scale <= 0.
Eigen::VectorXd sample_gaussian_vector(const Eigen::VectorXd& mean,
                                       double variance_scale, RngStream& rng);

// Poisson(mean); mean == 0 returns 0. Inversion by sequential search for
// small means, transformed rejection (PTRS) for large ones. Throws
// InvalidArgumentError if mean < 0.
std::uint64_t sample_poisson(double mean, RngStream& rng);

// Draw from density proportional to x^(-exponent) truncated to
// [lower, upper], via the inverse CDF. Requires 0 < lower < upper.
double sample_bounded_power_law(double lower, double upper, double exponent,
                                RngStream& rng);

// Analytic CDF of the truncated power law above; used by tests as the
// distributional oracle and by nothing on the sampling path.
double bounded_power_law_cdf(double x, double lower, double upper,
                             double exponent);

}  // namespace modmon
