#include "modmon/dmon.hpp"

#include <cmath>
#include <memory>
#include <utility>

#include "modmon/errors.hpp"
#include "modmon/modularity.hpp"

namespace modmon {

namespace {

void validate_dims(int attribute_dim, int hidden_dim, int communities) {
    if (attribute_dim < 1) throw InvalidArgumentError("attribute_dim must be >= 1");
    if (hidden_dim < 1) throw InvalidArgumentError("hidden_dim must be >= 1");
    if (communities < 2) throw InvalidArgumentError("communities must be >= 2");
}

void validate_train_config(const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) {
        throw InvalidArgumentError("learning_rate must be > 0");
    }
    if (config.epochs < 0) throw InvalidArgumentError("epochs must be >= 0");
    if (!(config.reg_weight >= 0.0)) throw InvalidArgumentError("reg_weight must be >= 0");
    if (!(config.dropout_rate >= 0.0) || config.dropout_rate >= 1.0) {
        throw InvalidArgumentError("dropout_rate must lie in [0, 1)");
    }
}

Eigen::MatrixXd glorot_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = limit * (2.0 * rng.next_double() - 1.0);
        }
    }
    return m;
}

Eigen::MatrixXd row_softmax_plain(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        Eigen::ArrayXd e = (logits.row(i).array() - m).exp();
        out.row(i) = (e / e.sum()).matrix();
    }
    return out;
}

// Inverted dropout: zero with probability `rate`, scale survivors by
// 1/(1-rate) so the expectation matches the undropped input. Entries are
// visited row-major, one uniform draw each.
Eigen::MatrixXd apply_dropout(const Eigen::MatrixXd& x, double rate, RngStream& rng) {
    const double keep_scale = 1.0 / (1.0 - rate);
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            out(i, j) = rng.next_double() < rate ? 0.0 : x(i, j) * keep_scale;
        }
    }
    return out;
}

}  // namespace

DmonModel::DmonModel(int attribute_dim, int hidden_dim, int communities)
    : attribute_dim_(attribute_dim), hidden_dim_(hidden_dim), communities_(communities) {
    validate_dims(attribute_dim, hidden_dim, communities);
    params_.add("w_conv", Eigen::MatrixXd::Zero(attribute_dim, hidden_dim));
    params_.add("w_skip", Eigen::MatrixXd::Zero(attribute_dim, hidden_dim));
    params_.add("w_out", Eigen::MatrixXd::Zero(hidden_dim, communities));
}

DmonModel DmonModel::glorot(int attribute_dim, int hidden_dim, int communities,
                            RngStream& rng) {
    DmonModel model(attribute_dim, hidden_dim, communities);
    model.params_.at("w_conv") = glorot_matrix(attribute_dim, hidden_dim, rng);
    model.params_.at("w_skip") = glorot_matrix(attribute_dim, hidden_dim, rng);
    model.params_.at("w_out") = glorot_matrix(hidden_dim, communities, rng);
    return model;
}

Eigen::MatrixXd DmonModel::forward_matrix(const AttributedSnapshot& snapshot) const {
    if (snapshot.attribute_dim() != attribute_dim_) {
        throw DimensionMismatchError("snapshot attribute_dim differs from model");
    }
    const Eigen::MatrixXd& x = snapshot.attributes();
    const Eigen::MatrixXd propagated = normalized_adjacency(snapshot) * x;
    Eigen::MatrixXd pre = propagated * w_conv() + x * w_skip();
    Eigen::MatrixXd hidden =
        pre.unaryExpr([](double v) { return detail::selu_scalar(v); });
    return row_softmax_plain(hidden * w_out());
}

SoftAssignment DmonModel::forward(const AttributedSnapshot& snapshot) const {
    return SoftAssignment(forward_matrix(snapshot));
}

double collapse_regularizer(const SoftAssignment& assignment) {
    const double n = static_cast<double>(assignment.node_count());
    const double k = static_cast<double>(assignment.communities());
    return std::sqrt(k) / n * assignment.matrix().colwise().sum().norm() - 1.0;
}

double srco(const SoftAssignment& assignment) {
    const double n = static_cast<double>(assignment.node_count());
    const Eigen::MatrixXd roots = assignment.matrix().cwiseSqrt();
    return roots.colwise().sum().norm() / std::sqrt(n) - 1.0;
}

double dmon_loss(const DmonModel& model, const AttributedSnapshot& snapshot,
                 const TrainConfig& config) {
    validate_train_config(config);
    const SoftAssignment c = model.forward(snapshot);
    const double q = modularity_soft(snapshot, c);
    double reg = 0.0;
    switch (config.regularizer) {
        case RegularizerKind::Srco: reg = srco(c); break;
        case RegularizerKind::Cr: reg = collapse_regularizer(c); break;
        case RegularizerKind::None: break;
    }
    return -q + config.reg_weight * reg;
}

LossProgram dmon_loss_program(const Eigen::MatrixXd& adjacency,
                              const Eigen::MatrixXd& attributes,
                              const Eigen::MatrixXd& propagated,
                              RegularizerKind regularizer, double reg_weight) {
    if (adjacency.rows() != adjacency.cols()) {
        throw DimensionMismatchError("loss program: adjacency must be square");
    }
    if (attributes.rows() != adjacency.rows() || propagated.rows() != adjacency.rows() ||
        propagated.cols() != attributes.cols()) {
        throw DimensionMismatchError("loss program: input shapes are inconsistent");
    }
    struct Inputs {
        Eigen::MatrixXd adjacency;
        Eigen::MatrixXd attributes;
        Eigen::MatrixXd propagated;
        Eigen::MatrixXd degrees;  // 1 x n row vector
        double two_w = 0.0;
    };
    auto in = std::make_shared<Inputs>();
    in->adjacency = adjacency;
    in->attributes = attributes;
    in->propagated = propagated;
    in->degrees = adjacency.colwise().sum();
    in->two_w = in->degrees.sum();
    if (!(in->two_w > 0.0)) throw EmptyGraphError("loss needs at least one edge");
    const double n = static_cast<double>(adjacency.rows());
    return [in, regularizer, reg_weight, n](Tape& t, const ParamBindings& p) -> Var {
        Var a = t.constant(in->adjacency);
        Var x = t.constant(in->attributes);
        Var prop = t.constant(in->propagated);
        Var d = t.constant(in->degrees);
        Var pre = t.add(t.matmul(prop, p.at("w_conv")), t.matmul(x, p.at("w_skip")));
        Var c = t.row_softmax(t.matmul(t.selu(pre), p.at("w_out")));
        Var trace = t.dot(c, t.matmul(a, c));  // Tr(C' A C)
        Var dc = t.matmul(d, c);               // degree mass per community, 1 x k
        Var penalty = t.affine(t.dot(dc, dc), 1.0 / in->two_w, 0.0);
        Var q = t.affine(t.sub(trace, penalty), 1.0 / in->two_w, 0.0);
        Var loss = t.affine(q, -1.0, 0.0);
        if (regularizer == RegularizerKind::Srco) {
            Var r = t.affine(t.l2_norm(t.col_sum(t.cwise_sqrt(c))), 1.0 / std::sqrt(n), -1.0);
            loss = t.add(loss, t.affine(r, reg_weight, 0.0));
        } else if (regularizer == RegularizerKind::Cr) {
            const double k = static_cast<double>(c.value().cols());
            Var r = t.affine(t.l2_norm(t.col_sum(c)), std::sqrt(k) / n, -1.0);
            loss = t.add(loss, t.affine(r, reg_weight, 0.0));
        }
        return loss;
    };
}

TrainResult train_phase1(DmonModel model,
                         const std::vector<AttributedSnapshot>& snapshots,
                         const TrainConfig& config, RngStream& rng) {
    validate_train_config(config);
    if (snapshots.empty()) {
        throw InsufficientDataError("training needs at least one snapshot");
    }
    for (const auto& snap : snapshots) {
        if (snap.attribute_dim() != model.attribute_dim()) {
            throw DimensionMismatchError("snapshot attribute_dim differs from model");
        }
    }

    const bool use_dropout = config.dropout_rate > 0.0;
    struct Cache {
        const AttributedSnapshot* snap = nullptr;
        Eigen::MatrixXd norm;  // needed per step only when dropout reshuffles X
        LossProgram program;   // prebuilt when inputs are step-invariant
    };
    std::vector<Cache> caches;
    caches.reserve(snapshots.size());
    for (const auto& snap : snapshots) {
        Cache cache;
        cache.snap = &snap;
        Eigen::MatrixXd norm = normalized_adjacency(snap);
        if (use_dropout) {
            cache.norm = std::move(norm);
        } else {
            cache.program =
                dmon_loss_program(snap.adjacency(), snap.attributes(),
                                  norm * snap.attributes(), config.regularizer,
                                  config.reg_weight);
        }
        caches.push_back(std::move(cache));
    }

    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    ParameterSet first_moment = model.parameters().zeros_like();
    ParameterSet second_moment = model.parameters().zeros_like();
    long step = 0;

    std::vector<double> epoch_losses;
    epoch_losses.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double loss_sum = 0.0;
        for (const Cache& cache : caches) {
            double loss = 0.0;
            ParameterSet grads;
            if (use_dropout) {
                const Eigen::MatrixXd dropped =
                    apply_dropout(cache.snap->attributes(), config.dropout_rate, rng);
                const LossProgram program = dmon_loss_program(
                    cache.snap->adjacency(), dropped, cache.norm * dropped,
                    config.regularizer, config.reg_weight);
                std::tie(loss, grads) = value_and_gradient(program, model.parameters());
            } else {
                std::tie(loss, grads) = value_and_gradient(cache.program, model.parameters());
            }
            loss_sum += loss;

            ++step;
            const double bias1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double bias2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            for (auto& [name, value] : model.parameters().items()) {
                const Eigen::MatrixXd& g = grads.at(name);
                Eigen::MatrixXd& m = first_moment.at(name);
                Eigen::MatrixXd& v = second_moment.at(name);
                m = kBeta1 * m + (1.0 - kBeta1) * g;
                v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
                value.array() -= config.learning_rate * (m.array() / bias1) /
                                 ((v.array() / bias2).sqrt() + kEps);
            }
        }
        epoch_losses.push_back(loss_sum / static_cast<double>(caches.size()));
    }
    return TrainResult{std::move(model), std::move(epoch_losses)};
}

double score(const DmonModel& model, const AttributedSnapshot& snapshot) {
    return modularity_soft(snapshot.adjacency(), model.forward_matrix(snapshot));
}

}  // namespace modmon
