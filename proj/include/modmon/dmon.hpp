#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modmon/autodiff.hpp"
#include "modmon/rng.hpp"
#include "modmon/snapshot.hpp"

namespace modmon {

enum class RegularizerKind { Srco, Cr, None };

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 200;
    RegularizerKind regularizer = RegularizerKind::Srco;
    double reg_weight = 1.0;
    std::uint64_t seed = 0;
    double dropout_rate = 0.0;
};

// One graph-convolution layer with a linear skip connection, selu activation,
// softmax output: C = softmax(selu(A_norm X Wconv + X Wskip) Wout).
class DmonModel {
public:
    DmonModel(int attribute_dim, int hidden_dim, int communities);

    // Glorot-uniform initialization from the given stream.
    static DmonModel glorot(int attribute_dim, int hidden_dim, int communities,
                            RngStream& rng);

    int attribute_dim() const { return attribute_dim_; }
    int hidden_dim() const { return hidden_dim_; }
    int communities() const { return communities_; }

    ParameterSet& parameters() { return params_; }
    const ParameterSet& parameters() const { return params_; }
    const Eigen::MatrixXd& w_conv() const { return params_.at("w_conv"); }
    const Eigen::MatrixXd& w_skip() const { return params_.at("w_skip"); }
    const Eigen::MatrixXd& w_out() const { return params_.at("w_out"); }

    // Soft assignments for one snapshot (dropout never applies here).
    SoftAssignment forward(const AttributedSnapshot& snapshot) const;

    // Raw row-stochastic matrix, for callers that do further math on it.
    Eigen::MatrixXd forward_matrix(const AttributedSnapshot& snapshot) const;

private:
    int attribute_dim_;
    int hidden_dim_;
    int communities_;
    ParameterSet params_;
};

// Collapse regularizer (sqrt(k)/n) ||ColSum(C)||_2 - 1. Zero for both the
// uniform and the balanced one-hot assignment; maximal when everything
// collapses into one community.
double collapse_regularizer(const SoftAssignment& assignment);

// Square-root collapse regularizer (1/sqrt(n)) ||ColSum(sqrt(C))||_2 - 1.
// Unlike CR it is maximal at the uniform assignment, so the trivial
// equal-weight solution is penalized.
double srco(const SoftAssignment& assignment);

// Full training objective: negative soft modularity plus the configured
// regularizer. Throws EmptyGraphError when the snapshot has no edges.
double dmon_loss(const DmonModel& model, const AttributedSnapshot& snapshot,
                 const TrainConfig& config);

// Loss as a differentiable program over the model parameters; shared by the
// trainer and the gradient-check tests. `attributes` must already carry any
// dropout, and `propagated` must equal normalized_adjacency * attributes.
LossProgram dmon_loss_program(const Eigen::MatrixXd& adjacency,
                              const Eigen::MatrixXd& attributes,
                              const Eigen::MatrixXd& propagated,
                              RegularizerKind regularizer, double reg_weight);

struct TrainResult {
    DmonModel model;
    std::vector<double> epoch_losses;  // mean per-snapshot loss, one per epoch
};

// Phase I training: for each epoch, one adaptive-moment step per snapshot in
// temporal order. rng drives dropout masks only; pass the stream used for the
// model init to keep one seed per training run.
TrainResult train_phase1(DmonModel model,
                         const std::vector<AttributedSnapshot>& snapshots,
                         const TrainConfig& config, RngStream& rng);

// Soft modularity of the model's assignment on one snapshot; dropout off,
// pure function of (model, snapshot).
double score(const DmonModel& model, const AttributedSnapshot& snapshot);

}  // namespace modmon
