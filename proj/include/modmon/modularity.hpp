#pragma once

#include <vector>

#include <Eigen/Dense>

#include "modmon/snapshot.hpp"

namespace modmon {

// Weighted degrees (adjacency row sums, diagonal counted once) and
// total weight w = grand sum / 2.
DegreeSummary degree_summary(const AttributedSnapshot& snapshot);

// Symmetrically degree-normalized adjacency D^(-1/2) A D^(-1/2).
// Zero-degree nodes get all-zero rows and columns.
Eigen::MatrixXd normalized_adjacency(const AttributedSnapshot& snapshot);

// Modularity of a hard labeling, summed over all ordered node pairs
// including u == v. Throws EmptyGraphError when w == 0.
double modularity_pairwise(const AttributedSnapshot& snapshot,
                           const std::vector<int>& labels);

// Spectral (trace-form) modularity (1/2w) Tr(C' B C) with B = A - dd'/2w,
// evaluated through the rank-1 correction rather than a dense B.
double modularity_soft(const AttributedSnapshot& snapshot,
                       const SoftAssignment& assignment);

// Same quantity from raw matrices; shared by the model scorer, which already
// holds the assignment as a plain matrix.
double modularity_soft(const Eigen::MatrixXd& adjacency,
                       const Eigen::MatrixXd& assignment);

}  // namespace modmon
