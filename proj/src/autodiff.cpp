#include "stg3net/autodiff.hpp"

#include <cmath>
#include <string>

namespace stg3net::ad {

const Matrix& Var::value() const { return tape_->value(id_); }

Matrix Var::grad() const { return tape_->grad(id_); }

double Var::item() const {
    const auto& v = value();
    if (v.rows() != 1 || v.cols() != 1) {
        throw std::invalid_argument("item() requires a 1x1 value");
    }
    return v(0, 0);
}

Var Tape::constant(Matrix value) {
    Node node;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Matrix value) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = true;
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p, bool trainable) {
    Node node;
    node.value = p.value;
    node.requires_grad = trainable;
    node.sink = trainable ? &p : nullptr;
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Matrix value, std::vector<Var> inputs, BackwardFn backward) {
    if (!value.allFinite()) {
        throw NumericError(std::string("non-finite output in ") + op);
    }
    Node node;
    node.value = std::move(value);
    node.is_leaf = false;
    for (const auto& in : inputs) {
        if (&in.tape() != this) {
            throw std::invalid_argument(std::string(op) + ": operands live on different tapes");
        }
        node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
    }
    if (node.requires_grad) {
        node.backward = std::move(backward);
    }
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& contribution) {
    auto& node = nodes_[id];
    if (!node.requires_grad) {
        return;
    }
    if (node.grad.size() == 0) {
        node.grad = contribution;
    } else {
        node.grad += contribution;
    }
}

Matrix Tape::grad(std::size_t id) const {
    const auto& node = nodes_[id];
    if (node.grad.size() == 0) {
        return Matrix::Zero(node.value.rows(), node.value.cols());
    }
    return node.grad;
}

void Tape::backward(Var root) {
    if (&root.tape() != this) {
        throw std::invalid_argument("backward: root lives on a different tape");
    }
    if (root.rows() != 1 || root.cols() != 1) {
        throw std::invalid_argument("backward: root must be a scalar");
    }

    for (auto& node : nodes_) {
        if (!node.is_leaf || node.sink != nullptr) {
            node.grad.resize(0, 0);
        }
    }

    accumulate(root.id(), Matrix::Ones(1, 1));
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        auto& node = nodes_[i];
        if (node.is_leaf || node.grad.size() == 0 || !node.backward) {
            continue;
        }
        // Copy: accumulate() may touch other nodes while we hold this one.
        const Matrix g = node.grad;
        node.backward(*this, g);
    }

    for (auto& node : nodes_) {
        if (node.sink != nullptr && node.grad.size() != 0) {
            node.sink->grad += node.grad;
        }
    }
}

namespace {

void require_same_shape(const char* op, Var a, Var b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()) + ")");
    }
}

}

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    }
    const auto ia = a.id(), ib = b.id();
    return a.tape().record("matmul", a.value() * b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        if (t.requires_grad(ia)) {
            t.accumulate(ia, g * t.value(ib).transpose());
        }
        if (t.requires_grad(ib)) {
            t.accumulate(ib, t.value(ia).transpose() * g);
        }
    });
}

Var spmm(const SparseMatrix& a_const, Var x) {
    if (a_const.cols() != x.rows()) {
        throw std::invalid_argument("spmm: inner dimensions differ");
    }
    const auto ix = x.id();
    const SparseMatrix* a = &a_const;
    Matrix out = a_const * x.value();
    return x.tape().record("spmm", std::move(out), {x}, [ix, a](Tape& t, const Matrix& g) {
        t.accumulate(ix, a->transpose() * g);
    });
}

Var add(Var a, Var b) {
    require_same_shape("add", a, b);
    const auto ia = a.id(), ib = b.id();
    return a.tape().record("add", a.value() + b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, g);
    });
}

Var sub(Var a, Var b) {
    require_same_shape("sub", a, b);
    const auto ia = a.id(), ib = b.id();
    return a.tape().record("sub", a.value() - b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, -g);
    });
}

Var add_row(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw std::invalid_argument("add_row: expected a 1x" + std::to_string(a.cols()) + " row");
    }
    const auto ia = a.id(), ir = row.id();
    Matrix out = a.value().rowwise() + row.value().row(0);
    return a.tape().record("add_row", std::move(out), {a, row}, [ia, ir](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        if (t.requires_grad(ir)) {
            t.accumulate(ir, g.colwise().sum());
        }
    });
}

Var mul(Var a, Var b) {
    require_same_shape("mul", a, b);
    const auto ia = a.id(), ib = b.id();
    Matrix out = a.value().cwiseProduct(b.value());
    return a.tape().record("mul", std::move(out), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        if (t.requires_grad(ia)) {
            t.accumulate(ia, g.cwiseProduct(t.value(ib)));
        }
        if (t.requires_grad(ib)) {
            t.accumulate(ib, g.cwiseProduct(t.value(ia)));
        }
    });
}

Var div(Var a, Var b) {
    require_same_shape("div", a, b);
    const auto ia = a.id(), ib = b.id();
    Matrix out = a.value().cwiseQuotient(b.value());
    return a.tape().record("div", std::move(out), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        const auto& bv = t.value(ib);
        if (t.requires_grad(ia)) {
            t.accumulate(ia, g.cwiseQuotient(bv));
        }
        if (t.requires_grad(ib)) {
            Matrix db = -g.cwiseProduct(t.value(ia)).cwiseQuotient(bv.cwiseProduct(bv));
            t.accumulate(ib, db);
        }
    });
}

Var scale(Var a, double c) {
    const auto ia = a.id();
    return a.tape().record("scale", a.value() * c, {a}, [ia, c](Tape& t, const Matrix& g) { t.accumulate(ia, g * c); });
}

Var add_scalar(Var a, double c) {
    const auto ia = a.id();
    Matrix out = a.value().array() + c;
    return a.tape().record("add_scalar", std::move(out), {a}, [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var relu(Var a) {
    const auto ia = a.id();
    Matrix out = a.value().cwiseMax(0.0);
    return a.tape().record("relu", std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
        Matrix mask = (t.value(ia).array() > 0.0).cast<double>();
        t.accumulate(ia, g.cwiseProduct(mask));
    });
}

Var leaky_relu(Var a, double slope) {
    const auto ia = a.id();
    Matrix out = a.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
    return a.tape().record("leaky_relu", std::move(out), {a}, [ia, slope](Tape& t, const Matrix& g) {
        Matrix d = t.value(ia).unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
        t.accumulate(ia, g.cwiseProduct(d));
    });
}

Var exp(Var a) {
    const auto ia = a.id();
    Matrix out = a.value().array().exp();
    const auto self = a.tape().size();
    return a.tape().record("exp", std::move(out), {a}, [ia, self](Tape& t, const Matrix& g) {
        t.accumulate(ia, g.cwiseProduct(t.value(self)));
    });
}

Var log(Var a, double floor) {
    const auto ia = a.id();
    Matrix out = a.value().unaryExpr([floor](double v) { return std::log(std::max(v, floor)); });
    return a.tape().record("log", std::move(out), {a}, [ia, floor](Tape& t, const Matrix& g) {
        const auto& v = t.value(ia);
        Matrix d = v.unaryExpr([floor](double x) { return x > floor ? 1.0 / x : 0.0; });
        t.accumulate(ia, g.cwiseProduct(d));
    });
}

Var pow(Var a, double p) {
    const auto ia = a.id();
    Matrix out = a.value().array().pow(p);
    return a.tape().record("pow", std::move(out), {a}, [ia, p](Tape& t, const Matrix& g) {
        Matrix d = p * t.value(ia).array().pow(p - 1.0);
        t.accumulate(ia, g.cwiseProduct(d));
    });
}

Var clamp_min(Var a, double lo) {
    const auto ia = a.id();
    Matrix out = a.value().cwiseMax(lo);
    return a.tape().record("clamp_min", std::move(out), {a}, [ia, lo](Tape& t, const Matrix& g) {
        Matrix mask = (t.value(ia).array() > lo).cast<double>();
        t.accumulate(ia, g.cwiseProduct(mask));
    });
}

Var row_softmax(Var a) {
    const auto ia = a.id();
    const auto& v = a.value();
    Matrix out(v.rows(), v.cols());
    for (Index i = 0; i < v.rows(); ++i) {
        const double m = v.row(i).maxCoeff();
        out.row(i) = (v.row(i).array() - m).exp();
        out.row(i) /= out.row(i).sum();
    }
    const auto self = a.tape().size();
    return a.tape().record("row_softmax", std::move(out), {a}, [ia, self](Tape& t, const Matrix& g) {
        const auto& p = t.value(self);
        Vector inner = g.cwiseProduct(p).rowwise().sum();
        Matrix d = p.cwiseProduct(g.colwise() - inner);
        t.accumulate(ia, d);
    });
}

Var row_sum(Var a) {
    const auto ia = a.id();
    const auto cols = a.cols();
    Matrix out = a.value().rowwise().sum();
    return a.tape().record("row_sum", std::move(out), {a}, [ia, cols](Tape& t, const Matrix& g) {
        t.accumulate(ia, g.col(0).replicate(1, cols));
    });
}

Var row_l2_norm(Var a) {
    const auto ia = a.id();
    Matrix out = a.value().rowwise().norm();
    const auto self = a.tape().size();
    return a.tape().record("row_l2_norm", std::move(out), {a}, [ia, self](Tape& t, const Matrix& g) {
        const auto& x = t.value(ia);
        const auto& n = t.value(self);
        Matrix d = Matrix::Zero(x.rows(), x.cols());
        for (Index i = 0; i < x.rows(); ++i) {
            if (n(i, 0) > 0.0) {
                d.row(i) = x.row(i) * (g(i, 0) / n(i, 0));
            }
        }
        t.accumulate(ia, d);
    });
}

Var sum(Var a) {
    const auto ia = a.id();
    const auto r = a.rows(), c = a.cols();
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return a.tape().record("sum", std::move(out), {a}, [ia, r, c](Tape& t, const Matrix& g) {
        t.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
    });
}

Var mean(Var a) {
    const auto n = static_cast<double>(a.value().size());
    if (n == 0) {
        throw std::invalid_argument("mean: empty operand");
    }
    return scale(sum(a), 1.0 / n);
}

Var gather_rows(Var a, const std::vector<Index>& rows) {
    const auto& v = a.value();
    Matrix out(static_cast<Index>(rows.size()), v.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] < 0 || rows[k] >= v.rows()) {
            throw std::out_of_range("gather_rows: row index out of range");
        }
        out.row(static_cast<Index>(k)) = v.row(rows[k]);
    }
    const auto ia = a.id();
    const auto r = v.rows(), c = v.cols();
    return a.tape().record("gather_rows", std::move(out), {a}, [ia, rows, r, c](Tape& t, const Matrix& g) {
        Matrix d = Matrix::Zero(r, c);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            d.row(rows[k]) += g.row(static_cast<Index>(k));
        }
        t.accumulate(ia, d);
    });
}

Var gather(Var a, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    if (rows.size() != cols.size()) {
        throw std::invalid_argument("gather: rows and cols differ in length");
    }
    const auto& v = a.value();
    Matrix out(static_cast<Index>(rows.size()), 1);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] < 0 || rows[k] >= v.rows() || cols[k] < 0 || cols[k] >= v.cols()) {
            throw std::out_of_range("gather: index out of range");
        }
        out(static_cast<Index>(k), 0) = v(rows[k], cols[k]);
    }
    const auto ia = a.id();
    const auto r = v.rows(), c = v.cols();
    return a.tape().record("gather", std::move(out), {a}, [ia, rows, cols, r, c](Tape& t, const Matrix& g) {
        Matrix d = Matrix::Zero(r, c);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            d(rows[k], cols[k]) += g(static_cast<Index>(k), 0);
        }
        t.accumulate(ia, d);
    });
}

double grad_check(const std::function<Var(Tape&, Var)>& f, const Matrix& theta, double eps) {
    Matrix analytic;
    {
        Tape tape;
        auto x = tape.leaf(theta);
        auto y = f(tape, x);
        tape.backward(y);
        analytic = x.grad();
    }

    auto eval = [&](const Matrix& point) {
        Tape tape;
        auto x = tape.constant(point);
        double v = f(tape, x).item();
        if (!std::isfinite(v)) {
            throw NumericError("grad_check: non-finite function value");
        }
        return v;
    };

    double worst = 0.0;
    Matrix probe = theta;
    for (Index j = 0; j < theta.cols(); ++j) {
        for (Index i = 0; i < theta.rows(); ++i) {
            const double orig = probe(i, j);
            probe(i, j) = orig + eps;
            const double up = eval(probe);
            probe(i, j) = orig - eps;
            const double down = eval(probe);
            probe(i, j) = orig;
            const double fd = (up - down) / (2 * eps);
            const double err = std::abs(fd - analytic(i, j)) / std::max(1.0, std::abs(fd));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

Adam::Adam(std::vector<Parameter*> params, AdamOptions options) : params_(std::move(params)), options_(options) {
    for (auto* p : params_) {
        first_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        second_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step() {
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double c1 = 1.0 - std::pow(options_.beta1, t);
    const double c2 = 1.0 - std::pow(options_.beta2, t);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = *params_[k];
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
            throw std::invalid_argument("adam: gradient shape mismatch for " + p.name);
        }
        Matrix g = p.grad + options_.weight_decay * p.value;
        first_[k] = options_.beta1 * first_[k] + (1.0 - options_.beta1) * g;
        second_[k] = options_.beta2 * second_[k] + (1.0 - options_.beta2) * g.cwiseProduct(g);
        Matrix denom = ((second_[k] / c2).array().sqrt() + options_.eps).matrix();
        p.value -= options_.lr * (first_[k] / c1).cwiseQuotient(denom);
    }
}

void Adam::zero_grad() {
    for (auto* p : params_) {
        p->zero_grad();
    }
}

}
