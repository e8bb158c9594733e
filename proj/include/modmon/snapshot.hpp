#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "modmon/errors.hpp"
#include "modmon/tolerances.hpp"

namespace modmon {

// One timestamped graph: weighted symmetric adjacency plus an n x s attribute
// matrix, with optional ground-truth community labels (synthetic data only).
// Instances are immutable after construction and safe to share across threads.
class AttributedSnapshot {
public:
    AttributedSnapshot(int t, Eigen::MatrixXd adjacency, Eigen::MatrixXd attributes,
                       std::optional<std::vector<int>> labels = std::nullopt)
        : t_(t),
          adjacency_(std::move(adjacency)),
          attributes_(std::move(attributes)),
          labels_(std::move(labels)) {
        validate();
    }

    int t() const { return t_; }
    Eigen::Index node_count() const { return adjacency_.rows(); }
    Eigen::Index attribute_dim() const { return attributes_.cols(); }
    const Eigen::MatrixXd& adjacency() const { return adjacency_; }
    const Eigen::MatrixXd& attributes() const { return attributes_; }
    const std::optional<std::vector<int>>& labels() const { return labels_; }

private:
    void validate() const {
        const auto n = adjacency_.rows();
        if (adjacency_.cols() != n) {
            throw DimensionMismatchError("snapshot adjacency must be square");
        }
        if (attributes_.rows() != n) {
            throw DimensionMismatchError("snapshot attribute rows must equal node count");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                if (adjacency_(i, j) < 0.0) {
                    throw InvalidArgumentError("snapshot adjacency entries must be >= 0");
                }
                if (std::abs(adjacency_(i, j) - adjacency_(j, i)) > tol::kSymmetry) {
                    throw InvalidArgumentError("snapshot adjacency must be symmetric");
                }
            }
        }
        if (labels_) {
            if (static_cast<Eigen::Index>(labels_->size()) != n) {
                throw DimensionMismatchError("label vector length must equal node count");
            }
            for (int c : *labels_) {
                if (c < 0) throw InvalidArgumentError("community labels must be >= 0");
            }
        }
    }

    int t_;
    Eigen::MatrixXd adjacency_;
    Eigen::MatrixXd attributes_;
    std::optional<std::vector<int>> labels_;
};

// Ordered sequence of snapshots sharing one attribute dimension. Node counts
// may vary between snapshots; timestamps must strictly increase.
class DynamicNetwork {
public:
    DynamicNetwork(std::vector<AttributedSnapshot> snapshots, int attribute_dim,
                   std::optional<int> changepoint = std::nullopt)
        : snapshots_(std::move(snapshots)),
          attribute_dim_(attribute_dim),
          changepoint_(changepoint) {
        for (std::size_t i = 0; i < snapshots_.size(); ++i) {
            if (snapshots_[i].attribute_dim() != attribute_dim_) {
                throw DimensionMismatchError("snapshot attribute dim differs from network dim");
            }
            if (i > 0 && snapshots_[i].t() <= snapshots_[i - 1].t()) {
                throw InvalidArgumentError("snapshot timestamps must strictly increase");
            }
        }
        if (changepoint_ &&
            (*changepoint_ < 0 || *changepoint_ >= static_cast<int>(snapshots_.size()))) {
            throw InvalidArgumentError("changepoint index out of range");
        }
    }

    const std::vector<AttributedSnapshot>& snapshots() const { return snapshots_; }
    std::size_t size() const { return snapshots_.size(); }
    int attribute_dim() const { return attribute_dim_; }
    std::optional<int> changepoint() const { return changepoint_; }

private:
    std::vector<AttributedSnapshot> snapshots_;
    int attribute_dim_;
    std::optional<int> changepoint_;
};

// Row-stochastic n x k community-membership matrix.
class SoftAssignment {
public:
    explicit SoftAssignment(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
        if (matrix_.cols() < 2) {
            throw InvalidArgumentError("soft assignment needs k >= 2 communities");
        }
        for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
            double row_sum = 0.0;
            for (Eigen::Index j = 0; j < matrix_.cols(); ++j) {
                const double v = matrix_(i, j);
                if (v < 0.0 || v > 1.0) {
                    throw InvalidArgumentError("soft assignment entries must lie in [0,1]");
                }
                row_sum += v;
            }
            if (std::abs(row_sum - 1.0) > tol::kRowStochastic) {
                throw InvalidArgumentError("soft assignment rows must sum to 1");
            }
        }
    }

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    Eigen::Index node_count() const { return matrix_.rows(); }
    Eigen::Index communities() const { return matrix_.cols(); }

    // Argmax-per-row projection onto hard labels.
    std::vector<int> hard_labels() const {
        std::vector<int> labels(static_cast<std::size_t>(matrix_.rows()));
        for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
            Eigen::Index best = 0;
            matrix_.row(i).maxCoeff(&best);
            labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        }
        return labels;
    }

private:
    Eigen::MatrixXd matrix_;
};

// Weighted degrees and half the grand sum of the adjacency.
struct DegreeSummary {
    Eigen::VectorXd degrees;
    double total_weight = 0.0;
};

}  // namespace modmon
