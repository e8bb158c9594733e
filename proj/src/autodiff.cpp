#include "modmon/autodiff.hpp"

#include <cmath>

namespace modmon {

using detail::kSeluAlpha;
using detail::kSeluLambda;

void ParameterSet::add(const std::string& name, Eigen::MatrixXd value) {
    if (contains(name)) throw InvalidArgumentError("duplicate parameter: " + name);
    items_.emplace_back(name, std::move(value));
}

bool ParameterSet::contains(const std::string& name) const {
    return index_of(name) >= 0;
}

int ParameterSet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].first == name) return static_cast<int>(i);
    }
    return -1;
}

Eigen::MatrixXd& ParameterSet::at(const std::string& name) {
    const int i = index_of(name);
    if (i < 0) throw InvalidArgumentError("unknown parameter: " + name);
    return items_[static_cast<std::size_t>(i)].second;
}

const Eigen::MatrixXd& ParameterSet::at(const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) throw InvalidArgumentError("unknown parameter: " + name);
    return items_[static_cast<std::size_t>(i)].second;
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet out;
    for (const auto& [name, value] : items_) {
        out.add(name, Eigen::MatrixXd::Zero(value.rows(), value.cols()));
    }
    return out;
}

const Eigen::MatrixXd& Var::value() const { return tape_->node(id_).value; }

double Var::scalar() const {
    const Eigen::MatrixXd& v = value();
    if (v.rows() != 1 || v.cols() != 1) {
        throw DimensionMismatchError("Var::scalar on a non 1x1 value");
    }
    return v(0, 0);
}

int Tape::push(Eigen::MatrixXd value, std::function<void(Tape&)> backward,
               std::string param_name) {
    nodes_.push_back(Node{std::move(value), {}, std::move(param_name), std::move(backward)});
    return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::constant(Eigen::MatrixXd value) {
    return Var(this, push(std::move(value), nullptr));
}

Var Tape::parameter(const std::string& name, const Eigen::MatrixXd& value) {
    return Var(this, push(value, nullptr, name));
}

Var Tape::matmul(Var a, Var b) {
    const auto& va = node(a.id_).value;
    const auto& vb = node(b.id_).value;
    if (va.cols() != vb.rows()) throw DimensionMismatchError("matmul: inner dimensions differ");
    const int ia = a.id_, ib = b.id_;
    const int out = push(va * vb, [ia, ib](Tape& t) {
        const auto& g = t.node(t.cursor_).grad;
        if (t.needs_grad(ia)) t.node(ia).grad.noalias() += g * t.node(ib).value.transpose();
        if (t.needs_grad(ib)) t.node(ib).grad.noalias() += t.node(ia).value.transpose() * g;
    });
    return Var(this, out);
}

Var Tape::add(Var a, Var b) {
    const auto& va = node(a.id_).value;
    const auto& vb = node(b.id_).value;
    if (va.rows() != vb.rows() || va.cols() != vb.cols()) {
        throw DimensionMismatchError("add: shapes differ");
    }
    const int ia = a.id_, ib = b.id_;
    const int out = push(va + vb, [ia, ib](Tape& t) {
        const auto& g = t.node(t.cursor_).grad;
        if (t.needs_grad(ia)) t.node(ia).grad += g;
        if (t.needs_grad(ib)) t.node(ib).grad += g;
    });
    return Var(this, out);
}

Var Tape::sub(Var a, Var b) {
    const auto& va = node(a.id_).value;
    const auto& vb = node(b.id_).value;
    if (va.rows() != vb.rows() || va.cols() != vb.cols()) {
        throw DimensionMismatchError("sub: shapes differ");
    }
    const int ia = a.id_, ib = b.id_;
    const int out = push(va - vb, [ia, ib](Tape& t) {
        const auto& g = t.node(t.cursor_).grad;
        if (t.needs_grad(ia)) t.node(ia).grad += g;
        if (t.needs_grad(ib)) t.node(ib).grad -= g;
    });
    return Var(this, out);
}

Var Tape::cwise_mul(Var a, Var b) {
    const auto& va = node(a.id_).value;
    const auto& vb = node(b.id_).value;
    if (va.rows() != vb.rows() || va.cols() != vb.cols()) {
        throw DimensionMismatchError("cwise_mul: shapes differ");
    }
    const int ia = a.id_, ib = b.id_;
    const int out = push(va.cwiseProduct(vb), [ia, ib](Tape& t) {
        const auto& g = t.node(t.cursor_).grad;
        if (t.needs_grad(ia)) t.node(ia).grad += g.cwiseProduct(t.node(ib).value);
        if (t.needs_grad(ib)) t.node(ib).grad += g.cwiseProduct(t.node(ia).value);
    });
    return Var(this, out);
}

Var Tape::affine(Var a, double mul, double add) {
    const int ia = a.id_;
    Eigen::MatrixXd v = mul * node(ia).value;
    v.array() += add;
    const int out = push(std::move(v), [ia, mul](Tape& t) {
        if (t.needs_grad(ia)) t.node(ia).grad += mul * t.node(t.cursor_).grad;
    });
    return Var(this, out);
}

Var Tape::selu(Var a) {
    const int ia = a.id_;
    const auto& va = node(ia).value;
    Eigen::MatrixXd v = va.unaryExpr([](double x) {
        return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * (std::exp(x) - 1.0);
    });
    const int out = push(std::move(v), [ia](Tape& t) {
        if (!t.needs_grad(ia)) return;
        const auto& g = t.node(t.cursor_).grad;
        const auto& x = t.node(ia).value;
        t.node(ia).grad += g.cwiseProduct(x.unaryExpr([](double e) {
            return e > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(e);
        }));
    });
    return Var(this, out);
}

Var Tape::row_softmax(Var a) {
    const int ia = a.id_;
    const auto& va = node(ia).value;
    Eigen::MatrixXd y(va.rows(), va.cols());
    for (Eigen::Index i = 0; i < va.rows(); ++i) {
        const double m = va.row(i).maxCoeff();
        Eigen::ArrayXd e = (va.row(i).array() - m).exp();
        y.row(i) = (e / e.sum()).matrix();
    }
    const int out = push(std::move(y), [ia](Tape& t) {
        if (!t.needs_grad(ia)) return;
        const auto& g = t.node(t.cursor_).grad;
        const auto& y = t.node(t.cursor_).value;
        // dx = y .* (g - rowwise <g, y>)
        Eigen::VectorXd row_dots = (g.cwiseProduct(y)).rowwise().sum();
        t.node(ia).grad += y.cwiseProduct(g - row_dots.replicate(1, g.cols()));
    });
    return Var(this, out);
}

Var Tape::col_sum(Var a) {
    const int ia = a.id_;
    Eigen::MatrixXd v = node(ia).value.colwise().sum();
    const int out = push(std::move(v), [ia](Tape& t) {
        if (!t.needs_grad(ia)) return;
        const auto& g = t.node(t.cursor_).grad;
        t.node(ia).grad += g.replicate(t.node(ia).value.rows(), 1);
    });
    return Var(this, out);
}

Var Tape::row_sum(Var a) {
    const int ia = a.id_;
    Eigen::MatrixXd v = node(ia).value.rowwise().sum();
    const int out = push(std::move(v), [ia](Tape& t) {
        if (!t.needs_grad(ia)) return;
        const auto& g = t.node(t.cursor_).grad;
        t.node(ia).grad += g.replicate(1, t.node(ia).value.cols());
    });
    return Var(this, out);
}

Var Tape::cwise_sqrt(Var a) {
    const int ia = a.id_;
    Eigen::MatrixXd v = node(ia).value.cwiseSqrt();
    const int out = push(std::move(v), [ia](Tape& t) {
        if (!t.needs_grad(ia)) return;
        const auto& g = t.node(t.cursor_).grad;
        const auto& y = t.node(t.cursor_).value;
        t.node(ia).grad += 0.5 * g.cwiseQuotient(y.cwiseMax(1e-12));
    });
    return Var(this, out);
}

Var Tape::l2_norm(Var a) {
    const int ia = a.id_;
    const double norm = node(ia).value.norm();
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = norm;
    const int out = push(std::move(v), [ia, norm](Tape& t) {
        if (norm == 0.0 || !t.needs_grad(ia)) return;
        const double g = t.node(t.cursor_).grad(0, 0);
        t.node(ia).grad += (g / norm) * t.node(ia).value;
    });
    return Var(this, out);
}

Var Tape::dot(Var a, Var b) {
    const auto& va = node(a.id_).value;
    const auto& vb = node(b.id_).value;
    if (va.rows() != vb.rows() || va.cols() != vb.cols()) {
        throw DimensionMismatchError("dot: shapes differ");
    }
    const int ia = a.id_, ib = b.id_;
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = va.cwiseProduct(vb).sum();
    const int out = push(std::move(v), [ia, ib](Tape& t) {
        const double g = t.node(t.cursor_).grad(0, 0);
        if (t.needs_grad(ia)) t.node(ia).grad += g * t.node(ib).value;
        if (t.needs_grad(ib)) t.node(ib).grad += g * t.node(ia).value;
    });
    return Var(this, out);
}

ParameterSet Tape::gradients(Var loss) {
    if (loss.tape_ != this) throw InvalidArgumentError("loss Var belongs to another tape");
    const auto& lv = node(loss.id_).value;
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw DimensionMismatchError("gradients: loss must be a 1x1 scalar");
    }
    for (auto& n : nodes_) {
        const bool track = n.backward != nullptr || !n.param_name.empty();
        n.grad = track ? Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols())
                       : Eigen::MatrixXd();
    }
    if (node(loss.id_).grad.size() == 0) node(loss.id_).grad = Eigen::MatrixXd::Zero(1, 1);
    node(loss.id_).grad(0, 0) = 1.0;
    for (cursor_ = loss.id_; cursor_ >= 0; --cursor_) {
        auto& n = node(cursor_);
        if (n.backward && !n.grad.isZero(0.0)) n.backward(*this);
    }
    ParameterSet grads;
    for (const auto& n : nodes_) {
        if (!n.param_name.empty()) grads.add(n.param_name, n.grad);
    }
    return grads;
}

Var ParamBindings::at(const std::string& name) const {
    for (const auto& [n, v] : vars_) {
        if (n == name) return v;
    }
    throw InvalidArgumentError("loss program references unknown parameter: " + name);
}

double evaluate_loss(const LossProgram& program, const ParameterSet& params) {
    Tape tape;
    ParamBindings bindings;
    for (const auto& [name, value] : params.items()) {
        bindings.vars_.emplace_back(name, tape.parameter(name, value));
    }
    return program(tape, bindings).scalar();
}

std::pair<double, ParameterSet> value_and_gradient(const LossProgram& program,
                                                   const ParameterSet& params) {
    Tape tape;
    ParamBindings bindings;
    for (const auto& [name, value] : params.items()) {
        bindings.vars_.emplace_back(name, tape.parameter(name, value));
    }
    Var loss = program(tape, bindings);
    ParameterSet grads = tape.gradients(loss);
    // Every parameter gets a gradient entry, including ones the program never
    // touched (their gradient is zero).
    for (const auto& [name, value] : params.items()) {
        if (!grads.contains(name)) {
            throw InvalidArgumentError("gradient bookkeeping lost parameter: " + name);
        }
    }
    return {loss.scalar(), std::move(grads)};
}

ParameterSet gradient(const LossProgram& program, const ParameterSet& params) {
    return value_and_gradient(program, params).second;
}

double finite_difference_check(const LossProgram& program,
                               const ParameterSet& params, double step) {
    if (!(step > 0.0)) throw InvalidArgumentError("finite_difference_check: step must be > 0");
    const ParameterSet analytic = gradient(program, params);
    ParameterSet work = params;
    double max_rel_error = 0.0;
    for (auto& [name, value] : work.items()) {
        for (Eigen::Index i = 0; i < value.rows(); ++i) {
            for (Eigen::Index j = 0; j < value.cols(); ++j) {
                const double original = value(i, j);
                value(i, j) = original + step;
                const double up = evaluate_loss(program, work);
                value(i, j) = original - step;
                const double down = evaluate_loss(program, work);
                value(i, j) = original;
                const double numeric = (up - down) / (2.0 * step);
                const double exact = analytic.at(name)(i, j);
                const double denom =
                    std::max({std::abs(exact), std::abs(numeric), 1e-8});
                max_rel_error = std::max(max_rel_error, std::abs(exact - numeric) / denom);
            }
        }
    }
    return max_rel_error;
}

}  // namespace modmon
