#include "modmon/modularity.hpp"

#include <algorithm>
#include <cmath>

namespace modmon {

DegreeSummary degree_summary(const AttributedSnapshot& snapshot) {
    DegreeSummary summary;
    summary.degrees = snapshot.adjacency().rowwise().sum();
    summary.total_weight = summary.degrees.sum() / 2.0;
    return summary;
}

Eigen::MatrixXd normalized_adjacency(const AttributedSnapshot& snapshot) {
    const Eigen::MatrixXd& a = snapshot.adjacency();
    const Eigen::VectorXd degrees = a.rowwise().sum();
    Eigen::VectorXd inv_sqrt(degrees.size());
    for (Eigen::Index i = 0; i < degrees.size(); ++i) {
        inv_sqrt[i] = degrees[i] > 0.0 ? 1.0 / std::sqrt(degrees[i]) : 0.0;
    }
    return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

double modularity_pairwise(const AttributedSnapshot& snapshot,
                           const std::vector<int>& labels) {
    const Eigen::MatrixXd& a = snapshot.adjacency();
    const auto n = a.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw DimensionMismatchError("modularity_pairwise: label count must equal node count");
    }
    const DegreeSummary deg = degree_summary(snapshot);
    const double two_w = 2.0 * deg.total_weight;
    if (two_w <= 0.0) throw EmptyGraphError("modularity is undefined on an empty graph");

    const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    // Group the pairwise sum by community: sum_r [ A(r,r) - D_r^2 / 2w ].
    Eigen::VectorXd degree_mass = Eigen::VectorXd::Zero(k);
    double intra_weight = 0.0;
    for (Eigen::Index u = 0; u < n; ++u) {
        degree_mass[labels[static_cast<std::size_t>(u)]] += deg.degrees[u];
        for (Eigen::Index v = 0; v < n; ++v) {
            if (labels[static_cast<std::size_t>(u)] == labels[static_cast<std::size_t>(v)]) {
                intra_weight += a(u, v);
            }
        }
    }
    return (intra_weight - degree_mass.squaredNorm() / two_w) / two_w;
}

double modularity_soft(const Eigen::MatrixXd& adjacency,
                       const Eigen::MatrixXd& assignment) {
    if (adjacency.rows() != assignment.rows()) {
        throw DimensionMismatchError("modularity_soft: assignment rows must equal node count");
    }
    const Eigen::VectorXd degrees = adjacency.rowwise().sum();
    const double two_w = degrees.sum();
    if (two_w <= 0.0) throw EmptyGraphError("modularity is undefined on an empty graph");

    // Tr(C'AC) via the Frobenius inner product <C, AC>; the dd'/2w part of B
    // collapses to ||d'C||^2 / 2w.
    const double trace_part = assignment.cwiseProduct(adjacency * assignment).sum();
    const Eigen::RowVectorXd degree_mix = degrees.transpose() * assignment;
    return (trace_part - degree_mix.squaredNorm() / two_w) / two_w;
}

double modularity_soft(const AttributedSnapshot& snapshot,
                       const SoftAssignment& assignment) {
    return modularity_soft(snapshot.adjacency(), assignment.matrix());
}

}  // namespace modmon
