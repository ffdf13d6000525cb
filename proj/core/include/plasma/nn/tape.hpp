#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "plasma/nn/tensor.hpp"

namespace plasma::nn {

class Tape;

/// Handle to a node on a Tape.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    std::uint32_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

    const Tensor& value() const;
    /// Gradient after Tape::backward(); empty tensor when none flowed here.
    const Tensor& grad() const;
    bool requires_grad() const;

private:
    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

/// Reverse-mode autodiff tape.
///
/// Nodes are appended in evaluation order and may only reference earlier
/// nodes, so the graph is acyclic by construction and the reverse creation
/// order is a valid topological order for backward(). Every op output is
/// checked for NaN/Inf.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf that never receives a gradient.
    Var constant(Tensor value);
    /// Leaf that accumulates a gradient when `trainable`.
    Var parameter(Tensor value, bool trainable = true);

    /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one value.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    // Internal API for op implementations.
    using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;
    Var push(Tensor value, bool requires_grad, BackwardFn fn);
    const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
    const Tensor& grad(std::uint32_t id) const { return nodes_[id].grad; }
    bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
    /// Gradient buffer of `id`, zero-initialized on first access.
    Tensor& grad_buffer(std::uint32_t id);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Shapes are rank-2; "row" tensors are 1 x n.

Var matmul(Var a, Var b);                 // [m,k] x [k,n]
Var transpose(Var a);                     // [m,n] -> [n,m]
Var add(Var a, Var b);                    // same shape
Var sub(Var a, Var b);                    // same shape
Var mul(Var a, Var b);                    // elementwise
Var add_row(Var a, Var row);              // [m,n] + [1,n]
Var mul_row(Var a, Var row);              // [m,n] * [1,n]
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);                           // input must be > 0
Var reciprocal(Var a);                    // input must be nonzero
Var clamp_min(Var a, double lo);          // gradient 0 where clamped
Var min_const(Var a, const Tensor& cap);  // elementwise min(a, cap); gradient 0 where capped
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var layer_norm_rows(Var a, double eps = 1e-5);  // per-row standardization, no affine
Var l2_normalize_rows(Var a);             // zero rows stay zero
Var embedding(Var table, std::span<const int> ids);    // gather rows
Var gather_cols(Var a, std::span<const int> cols);     // [m,n] -> [m,k]
Var concat_rows(Var a, Var b);            // [m1,n] ++ [m2,n]
Var concat_cols(std::span<const Var> parts);           // equal row counts
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var sum_all(Var a);                       // -> [1,1]
Var sum_rows(Var a);                      // [m,n] -> [1,n]
Var mean_rows(Var a);                     // [m,n] -> [1,n]
Var pick(Var a, std::size_t row, std::size_t col);     // -> [1,1]

struct AttentionOptions {
    std::size_t heads = 1;
    bool causal = false;
    /// Leading key/value rows that come from a prefix. They are visible to
    /// every query (including under causal masking) unless mask_prefix.
    std::size_t prefix_len = 0;
    bool mask_prefix = false;
};

/// Fused scaled dot-product multi-head attention.
/// q: [Tq, d], k and v: [Tk, d] with Tk = prefix_len + keys. Returns [Tq, d].
Var attention(Var q, Var k, Var v, const AttentionOptions& opt);

/// Mean token negative log-likelihood over positions whose target != pad_id.
/// Throws InvalidArgument when every target is padding.
Var cross_entropy(Var logits, std::span<const int> targets, int pad_id);

}  // namespace plasma::nn
