#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "modmon/errors.hpp"

namespace modmon {

namespace detail {
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;

inline double selu_scalar(double x) {
    return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * (std::exp(x) - 1.0);
}
}  // namespace detail

// Ordered, named collection of trainable matrices. Iteration order is
// insertion order, which keeps optimizers and checks deterministic.
class ParameterSet {
public:
    void add(const std::string& name, Eigen::MatrixXd value);
    bool contains(const std::string& name) const;
    Eigen::MatrixXd& at(const std::string& name);
    const Eigen::MatrixXd& at(const std::string& name) const;
    std::size_t size() const { return items_.size(); }

    std::vector<std::pair<std::string, Eigen::MatrixXd>>& items() { return items_; }
    const std::vector<std::pair<std::string, Eigen::MatrixXd>>& items() const {
        return items_;
    }

    // Same names and shapes, all-zero values.
    ParameterSet zeros_like() const;

private:
    int index_of(const std::string& name) const;
    std::vector<std::pair<std::string, Eigen::MatrixXd>> items_;
};

class Tape;

// Handle to one tape node. Cheap to copy; valid as long as the tape lives.
class Var {
public:
    Var() = default;
    const Eigen::MatrixXd& value() const;
    double scalar() const;

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    int id_ = -1;
};

// Reverse-mode tape over dense matrices. Covers exactly the primitives the
// DMoN loss needs: matmul, elementwise ops, selu, row softmax, column/row
// sums, Frobenius norm and inner product.
class Tape {
public:
    Var constant(Eigen::MatrixXd value);
    Var parameter(const std::string& name, const Eigen::MatrixXd& value);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var cwise_mul(Var a, Var b);
    // Elementwise mul * a + add.
    Var affine(Var a, double mul, double add);
    Var selu(Var a);
    Var row_softmax(Var a);
    Var col_sum(Var a);
    Var row_sum(Var a);
    // Elementwise square root; inputs must be nonnegative, and gradients are
    // only meaningful away from zero (softmax outputs satisfy both).
    Var cwise_sqrt(Var a);
    // Frobenius norm as a 1x1 matrix.
    Var l2_norm(Var a);
    // Frobenius inner product <a, b> as a 1x1 matrix.
    Var dot(Var a, Var b);

    // Backpropagate from a scalar loss; returns gradients for every
    // parameter leaf registered on this tape.
    ParameterSet gradients(Var loss);

private:
    friend class Var;
    struct Node {
        Eigen::MatrixXd value;
        Eigen::MatrixXd grad;
        std::string param_name;
        std::function<void(Tape&)> backward;
    };

    int push(Eigen::MatrixXd value, std::function<void(Tape&)> backward,
             std::string param_name = {});
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    // Constants neither receive nor propagate gradients; skipping them saves
    // the dominant n x n buffers during training.
    bool needs_grad(int id) const {
        const Node& n = node(id);
        return n.backward != nullptr || !n.param_name.empty();
    }

    std::vector<Node> nodes_;
    // Id of the node whose backward closure is currently running; lets the
    // closure find its own output gradient without capturing its id.
    int cursor_ = -1;
};

// A loss program builds a scalar loss from parameter leaves; the same program
// is reused for analytic gradients and for finite-difference evaluation.
class ParamBindings {
public:
    Var at(const std::string& name) const;

private:
    friend ParameterSet gradient(
        const std::function<Var(Tape&, const ParamBindings&)>&, const ParameterSet&);
    friend double evaluate_loss(
        const std::function<Var(Tape&, const ParamBindings&)>&, const ParameterSet&);
    friend std::pair<double, ParameterSet> value_and_gradient(
        const std::function<Var(Tape&, const ParamBindings&)>&, const ParameterSet&);
    std::vector<std::pair<std::string, Var>> vars_;
};

using LossProgram = std::function<Var(Tape&, const ParamBindings&)>;

// Scalar loss value at the given parameters.
double evaluate_loss(const LossProgram& program, const ParameterSet& params);

// Loss value plus exact reverse-mode gradients in one tape pass.
std::pair<double, ParameterSet> value_and_gradient(const LossProgram& program,
                                                   const ParameterSet& params);

// Exact reverse-mode gradients of the scalar loss for every parameter.
ParameterSet gradient(const LossProgram& program, const ParameterSet& params);

// Central-difference validation of gradient(); returns the maximum relative
// error over all parameter entries, with denominator
// max(|analytic|, |numeric|, 1e-8).
double finite_difference_check(const LossProgram& program,
                               const ParameterSet& params, double step);

}  // namespace modmon
