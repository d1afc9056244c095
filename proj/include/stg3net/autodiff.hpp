#ifndef STG3NET_AUTODIFF_HPP
#define STG3NET_AUTODIFF_HPP

#include "stg3net/types.hpp"

#include <functional>
#include <string>
#include <vector>

/**
 * @file autodiff.hpp
 *
 * @brief Minimal reverse-mode differentiation over dense matrices.
 *
 * A `Tape` records every primitive application in execution order, which is
 * already a topological order; `Tape::backward()` walks it in reverse. Values
 * are double precision and every primitive rejects non-finite outputs.
 */

namespace stg3net::ad {

/**
 * A trainable array that lives across tapes. Gradients from each backward
 * pass are summed into `grad` until `zero_grad()` is called.
 */
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/**
 * Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
 */
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Matrix& value() const;

    /** Accumulated cotangent; a zero matrix if nothing reached this node. */
    Matrix grad() const;

    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }

    /** Scalar value of a 1x1 node. */
    double item() const;

    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /** A value that never receives gradient. */
    Var constant(Matrix value);

    /** A free leaf whose gradient accumulates on the tape across backward calls. */
    Var leaf(Matrix value);

    /**
     * Leaf holding a copy of `p.value`. When `trainable`, each backward pass adds
     * this node's cotangent into `p.grad`; otherwise it behaves like a constant.
     */
    Var param(Parameter& p, bool trainable = true);

    /**
     * Record a primitive. `inputs` must already be on this tape. The backward
     * callback is dropped when no input requires gradient.
     */
    Var record(const char* op, Matrix value, std::vector<Var> inputs, BackwardFn backward);

    /**
     * Propagate d(root)/d(node) to every node. `root` must be 1x1.
     * Intermediate cotangents are reset first; free leaves keep accumulating and
     * parameter-bound leaves add this pass's contribution into their Parameter.
     */
    void backward(Var root);

    /** Add a cotangent contribution to node `id`, if it requires gradient. */
    void accumulate(std::size_t id, const Matrix& contribution);

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    Matrix grad(std::size_t id) const;
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        bool is_leaf = true;
        Parameter* sink = nullptr;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
};

/**
 * @name Primitives
 * All operands must come from the same tape.
 */
///@{
Var matmul(Var a, Var b);

/** `a_const * x` where the sparse operand is a constant. It must outlive the tape. */
Var spmm(const SparseMatrix& a_const, Var x);

Var add(Var a, Var b);
Var sub(Var a, Var b);
/** Adds a 1 x cols row vector to every row of `a`. */
Var add_row(Var a, Var row);
/** Elementwise product. */
Var mul(Var a, Var b);
/** Elementwise quotient. */
Var div(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var neg(Var a);

Var relu(Var a);
Var leaky_relu(Var a, double slope = 0.01);
Var exp(Var a);
/** Natural log with inputs clamped below at `floor`; clamped entries pass no gradient. */
Var log(Var a, double floor = 0.0);
Var pow(Var a, double p);
/** max(a, lo) elementwise; clamped entries pass no gradient. */
Var clamp_min(Var a, double lo);

Var row_softmax(Var a);
/** N x 1 column of row sums. */
Var row_sum(Var a);
/** N x 1 column of row Euclidean norms; zero rows pass no gradient. */
Var row_l2_norm(Var a);
Var sum(Var a);
Var mean(Var a);
Var gather_rows(Var a, const std::vector<Index>& rows);
/** k x 1 column of a(rows[i], cols[i]). */
Var gather(Var a, const std::vector<Index>& rows, const std::vector<Index>& cols);
///@}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return neg(a); }

/**
 * Central-difference check of the tape gradient of scalar `f` at `theta`.
 * Returns max over coordinates of |g_fd - g_ad| / max(1, |g_fd|).
 */
double grad_check(const std::function<Var(Tape&, Var)>& f, const Matrix& theta, double eps = 1e-5);

struct AdamOptions {
    double lr = 1e-3;
    double weight_decay = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/**
 * Bias-corrected Adam with L2 weight decay folded into the gradient
 * (g <- g + weight_decay * theta).
 */
class Adam {
public:
    Adam(std::vector<Parameter*> params, AdamOptions options = {});

    void step();
    void zero_grad();

    std::size_t step_count() const { return step_count_; }
    const AdamOptions& options() const { return options_; }

private:
    std::vector<Parameter*> params_;
    std::vector<Matrix> first_;
    std::vector<Matrix> second_;
    AdamOptions options_;
    std::size_t step_count_ = 0;
};

}

#endif
