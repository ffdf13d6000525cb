#include "plasma/nn/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "plasma/util/error.hpp"

namespace plasma::nn {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::push(Tensor value, bool requires_grad, BackwardFn fn) {
    if (!value.all_finite()) throw NumericError("non-finite value produced at node " + std::to_string(nodes_.size()));
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, {}); }

Var Tape::parameter(Tensor value, bool trainable) { return push(std::move(value), trainable, {}); }

Tensor& Tape::grad_buffer(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape(), 0.0);
    return n.grad;
}

void Tape::backward(Var loss) {
    if (loss.id() >= nodes_.size() || &loss.tape() != this) throw InvalidArgument("backward: loss not on this tape");
    if (nodes_[loss.id()].value.size() != 1) throw InvalidArgument("backward: loss must be a scalar");
    if (!nodes_[loss.id()].requires_grad) return;
    for (auto& n : nodes_) n.grad = Tensor();
    grad_buffer(loss.id())[0] = 1.0;
    for (std::uint32_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
        n.backward(*this, i);
    }
}

namespace {

void check_same_tape(Var a, Var b) {
    if (&a.tape() != &b.tape()) throw InvalidArgument("operands live on different tapes");
}

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) throw InvalidArgument(std::string(op) + ": expected a rank-2 tensor, got " + t.shape_string());
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using View = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

// Row-major C[m,n] = alpha * op(A) * op(B) + beta * C, leading dimensions as in BLAS.
void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, double alpha, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, double beta, double* c, std::size_t ldc) {
    if (m == 0 || n == 0) return;
    const auto M = static_cast<Eigen::Index>(m), N = static_cast<Eigen::Index>(n), K = static_cast<Eigen::Index>(k);
    View C(c, M, N, Eigen::OuterStride<>(static_cast<Eigen::Index>(ldc)));
    if (beta == 0.0)
        C.setZero();
    else if (beta != 1.0)
        C *= beta;
    if (k == 0) return;
    ConstView A(a, ta ? K : M, ta ? M : K, Eigen::OuterStride<>(static_cast<Eigen::Index>(lda)));
    ConstView B(b, tb ? N : K, tb ? K : N, Eigen::OuterStride<>(static_cast<Eigen::Index>(ldb)));
    if (!ta && !tb)
        C.noalias() += alpha * A * B;
    else if (!ta)
        C.noalias() += alpha * A * B.transpose();
    else if (!tb)
        C.noalias() += alpha * A.transpose() * B;
    else
        C.noalias() += alpha * A.transpose() * B.transpose();
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    gemm(false, false, m, n, k, 1.0, a, k, b, n, 1.0, c, n);
}

// C[m,k] += A[m,n] * B[k,n]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    gemm(false, true, m, k, n, 1.0, a, n, b, n, 1.0, c, k);
}

// C[k,n] += A[m,k]^T * B[m,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    gemm(true, false, k, n, m, 1.0, a, k, b, n, 1.0, c, n);
}

template <typename F>
Var unary(Var a, F&& f, Tape::BackwardFn bw) {
    const Tensor& x = a.value();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return a.tape().push(std::move(out), a.requires_grad(), std::move(bw));
}

}  // namespace

Var matmul(Var a, Var b) {
    check_same_tape(a, b);
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    require_rank2(x, "matmul");
    require_rank2(y, "matmul");
    if (x.cols() != y.rows())
        throw InvalidArgument("matmul: shape mismatch " + x.shape_string() + " x " + y.shape_string());
    const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
    Tensor out = Tensor::matrix(m, n);
    gemm_nn(x.data(), y.data(), out.data(), m, k, n);
    const auto ia = a.id(), ib = b.id();
    return a.tape().push(std::move(out), a.requires_grad() || b.requires_grad(),
                         [ia, ib, m, k, n](Tape& t, std::uint32_t self) {
                             const Tensor& g = t.grad(self);
                             if (t.requires_grad(ia)) gemm_nt(g.data(), t.value(ib).data(), t.grad_buffer(ia).data(), m, n, k);
                             if (t.requires_grad(ib)) gemm_tn(t.value(ia).data(), g.data(), t.grad_buffer(ib).data(), m, k, n);
                         });
}

Var transpose(Var a) {
    const Tensor& x = a.value();
    require_rank2(x, "transpose");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out = Tensor::matrix(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(j, i) = x(i, j);
    const auto ia = a.id();
    return a.tape().push(std::move(out), a.requires_grad(), [ia, m, n](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ga(i, j) += g(j, i);
    });
}

namespace {

Var add_like(Var a, Var b, double sign) {
    check_same_tape(a, b);
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    if (!x.same_shape(y)) throw InvalidArgument("add/sub: shape mismatch " + x.shape_string() + " vs " + y.shape_string());
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * y[i];
    const auto ia = a.id(), ib = b.id();
    return a.tape().push(std::move(out), a.requires_grad() || b.requires_grad(),
                         [ia, ib, sign](Tape& t, std::uint32_t self) {
                             const Tensor& g = t.grad(self);
                             if (t.requires_grad(ia)) {
                                 Tensor& ga = t.grad_buffer(ia);
                                 for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                             }
                             if (t.requires_grad(ib)) {
                                 Tensor& gb = t.grad_buffer(ib);
                                 for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
                             }
                         });
}

}  // namespace

Var add(Var a, Var b) { return add_like(a, b, 1.0); }
Var sub(Var a, Var b) { return add_like(a, b, -1.0); }

Var mul(Var a, Var b) {
    check_same_tape(a, b);
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    if (!x.same_shape(y)) throw InvalidArgument("mul: shape mismatch");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
    const auto ia = a.id(), ib = b.id();
    return a.tape().push(std::move(out), a.requires_grad() || b.requires_grad(), [ia, ib](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) {
            Tensor& ga = t.grad_buffer(ia);
            const Tensor& y = t.value(ib);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
        }
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad_buffer(ib);
            const Tensor& x = t.value(ia);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
        }
    });
}

Var add_row(Var a, Var row) {
    check_same_tape(a, row);
    const Tensor& x = a.value();
    const Tensor& r = row.value();
    require_rank2(x, "add_row");
    if (r.size() != x.cols()) throw InvalidArgument("add_row: row width mismatch");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out = x;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += r[j];
    const auto ia = a.id(), ir = row.id();
    return a.tape().push(std::move(out), a.requires_grad() || row.requires_grad(),
                         [ia, ir, m, n](Tape& t, std::uint32_t self) {
                             const Tensor& g = t.grad(self);
                             if (t.requires_grad(ia)) {
                                 Tensor& ga = t.grad_buffer(ia);
                                 for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                             }
                             if (t.requires_grad(ir)) {
                                 Tensor& gr = t.grad_buffer(ir);
                                 for (std::size_t i = 0; i < m; ++i)
                                     for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
                             }
                         });
}

Var mul_row(Var a, Var row) {
    check_same_tape(a, row);
    const Tensor& x = a.value();
    const Tensor& r = row.value();
    require_rank2(x, "mul_row");
    if (r.size() != x.cols()) throw InvalidArgument("mul_row: row width mismatch");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out = x;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] *= r[j];
    const auto ia = a.id(), ir = row.id();
    return a.tape().push(std::move(out), a.requires_grad() || row.requires_grad(),
                         [ia, ir, m, n](Tape& t, std::uint32_t self) {
                             const Tensor& g = t.grad(self);
                             const Tensor& x = t.value(ia);
                             const Tensor& r = t.value(ir);
                             if (t.requires_grad(ia)) {
                                 Tensor& ga = t.grad_buffer(ia);
                                 for (std::size_t i = 0; i < m; ++i)
                                     for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i * n + j] * r[j];
                             }
                             if (t.requires_grad(ir)) {
                                 Tensor& gr = t.grad_buffer(ir);
                                 for (std::size_t i = 0; i < m; ++i)
                                     for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j] * x[i * n + j];
                             }
                         });
}

Var scale(Var a, double s) {
    const auto ia = a.id();
    return unary(a, [s](double x) { return s * x; }, [ia, s](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
    });
}

Var add_scalar(Var a, double s) {
    const auto ia = a.id();
    return unary(a, [s](double x) { return x + s; }, [ia](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

Var relu(Var a) {
    const auto ia = a.id();
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [ia](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& x = t.value(ia);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x[i] > 0.0) ga[i] += g[i];
    });
}

Var exp(Var a) {
    const auto ia = a.id();
    return unary(a, [](double x) { return std::exp(x); }, [ia](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    });
}

Var log(Var a) {
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > 0.0)) throw NumericError("log: non-positive input");
    const auto ia = a.id();
    return unary(a, [](double v) { return std::log(v); }, [ia](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& x = t.value(ia);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
    });
}

Var reciprocal(Var a) {
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] == 0.0) throw NumericError("reciprocal: zero input");
    const auto ia = a.id();
    return unary(a, [](double v) { return 1.0 / v; }, [ia](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i] * y[i] * y[i];
    });
}

Var clamp_min(Var a, double lo) {
    const auto ia = a.id();
    return unary(a, [lo](double x) { return x < lo ? lo : x; }, [ia, lo](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& x = t.value(ia);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x[i] >= lo) ga[i] += g[i];
    });
}

Var min_const(Var a, const Tensor& cap) {
    const Tensor& x = a.value();
    if (!x.same_shape(cap)) throw InvalidArgument("min_const: shape mismatch");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], cap[i]);
    const auto ia = a.id();
    return a.tape().push(std::move(out), a.requires_grad(), [ia, cap](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& x = t.value(ia);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x[i] <= cap[i]) ga[i] += g[i];
    });
}

Var softmax_rows(Var a) {
    const Tensor& x = a.value();
    require_rank2(x, "softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out = x;
    for (std::size_t i = 0; i < m; ++i) {
        double* r = out.data() + i * n;
        const double mx = *std::max_element(r, r + n);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += (r[j] = std::exp(r[j] - mx));
        for (std::size_t j = 0; j < n; ++j) r[j] /= s;
    }
    const auto ia = a.id();
    return a.tape().push(std::move(out), a.requires_grad(), [ia, m, n](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
        }
    });
}

Var log_softmax_rows(Var a) {
    const Tensor& x = a.value();
    require_rank2(x, "log_softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out = x;
    for (std::size_t i = 0; i < m; ++i) {
        double* r = out.data() + i * n;
        const double mx = *std::max_element(r, r + n);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += std::exp(r[j] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t j = 0; j < n; ++j) r[j] -= lse;
    }
    const auto ia = a.id();
    return a.tape().push(std::move(out), a.requires_grad(), [ia, m, n](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < m; ++i) {
            double gs = 0.0;
            for (std::size_t j = 0; j < n; ++j) gs += g[i * n + j];
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i * n + j] - std::exp(y[i * n + j]) * gs;
        }
    });
}

Var layer_norm_rows(Var a, double eps) {
    const Tensor& x = a.value();
    require_rank2(x, "layer_norm_rows");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out(x.shape());
    std::vector<double> inv_std(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* r = x.data() + i * n;
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += r[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (r[j] - mean) * (r[j] - mean);
        var /= static_cast<double>(n);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = (r[j] - mean) * inv_std[i];
    }
    const auto ia = a.id();
    return a.tape().push(std::move(out), a.requires_grad(),
                         [ia, m, n, inv_std = std::move(inv_std)](Tape& t, std::uint32_t self) {
                             const Tensor& g = t.grad(self);
                             const Tensor& y = t.value(self);
                             Tensor& ga = t.grad_buffer(ia);
                             const double dn = static_cast<double>(n);
                             for (std::size_t i = 0; i < m; ++i) {
                                 double gsum = 0.0, gy = 0.0;
                                 for (std::size_t j = 0; j < n; ++j) {
                                     gsum += g[i * n + j];
                                     gy += g[i * n + j] * y[i * n + j];
                                 }
                                 for (std::size_t j = 0; j < n; ++j)
                                     ga[i * n + j] +=
                                         inv_std[i] * (g[i * n + j] - gsum / dn - y[i * n + j] * gy / dn);
                             }
                         });
}

Var l2_normalize_rows(Var a) {
    const Tensor& x = a.value();
    require_rank2(x, "l2_normalize_rows");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out(x.shape());
    std::vector<double> norms(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += x[i * n + j] * x[i * n + j];
        norms[i] = std::sqrt(s);
        if (norms[i] > 0.0)
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] / norms[i];
    }
    const auto ia = a.id();
    return a.tape().push(std::move(out), a.requires_grad(),
                         [ia, m, n, norms = std::move(norms)](Tape& t, std::uint32_t self) {
                             const Tensor& g = t.grad(self);
                             const Tensor& y = t.value(self);
                             Tensor& ga = t.grad_buffer(ia);
                             for (std::size_t i = 0; i < m; ++i) {
                                 if (norms[i] == 0.0) continue;
                                 double dot = 0.0;
                                 for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
                                 for (std::size_t j = 0; j < n; ++j)
                                     ga[i * n + j] += (g[i * n + j] - y[i * n + j] * dot) / norms[i];
                             }
                         });
}

Var embedding(Var table, std::span<const int> ids) {
    const Tensor& w = table.value();
    require_rank2(w, "embedding");
    const std::size_t v = w.rows(), d = w.cols();
    Tensor out = Tensor::matrix(ids.size(), d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v)
            throw InvalidArgument("embedding: token id " + std::to_string(ids[i]) + " out of range");
        std::copy_n(w.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
    }
    const auto it = table.id();
    return table.tape().push(std::move(out), table.requires_grad(),
                             [it, d, idv = std::vector<int>(ids.begin(), ids.end())](Tape& t, std::uint32_t self) {
                                 const Tensor& g = t.grad(self);
                                 Tensor& gw = t.grad_buffer(it);
                                 for (std::size_t i = 0; i < idv.size(); ++i) {
                                     double* dst = gw.data() + static_cast<std::size_t>(idv[i]) * d;
                                     const double* src = g.data() + i * d;
                                     for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                                 }
                             });
}

Var gather_cols(Var a, std::span<const int> cols) {
    const Tensor& x = a.value();
    require_rank2(x, "gather_cols");
    const std::size_t m = x.rows(), n = x.cols(), k = cols.size();
    Tensor out = Tensor::matrix(m, k);
    for (std::size_t c = 0; c < k; ++c)
        if (cols[c] < 0 || static_cast<std::size_t>(cols[c]) >= n) throw InvalidArgument("gather_cols: index out of range");
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < k; ++c) out[i * k + c] = x[i * n + static_cast<std::size_t>(cols[c])];
    const auto ia = a.id();
    return a.tape().push(std::move(out), a.requires_grad(),
                         [ia, m, n, k, cv = std::vector<int>(cols.begin(), cols.end())](Tape& t, std::uint32_t self) {
                             const Tensor& g = t.grad(self);
                             Tensor& ga = t.grad_buffer(ia);
                             for (std::size_t i = 0; i < m; ++i)
                                 for (std::size_t c = 0; c < k; ++c) ga[i * n + static_cast<std::size_t>(cv[c])] += g[i * k + c];
                         });
}

Var concat_rows(Var a, Var b) {
    check_same_tape(a, b);
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    require_rank2(x, "concat_rows");
    require_rank2(y, "concat_rows");
    if (x.cols() != y.cols()) throw InvalidArgument("concat_rows: column mismatch");
    const std::size_t n = x.cols(), m1 = x.rows(), m2 = y.rows();
    Tensor out = Tensor::matrix(m1 + m2, n);
    std::copy_n(x.data(), x.size(), out.data());
    std::copy_n(y.data(), y.size(), out.data() + x.size());
    const auto ia = a.id(), ib = b.id();
    return a.tape().push(std::move(out), a.requires_grad() || b.requires_grad(),
                         [ia, ib, m1, m2, n](Tape& t, std::uint32_t self) {
                             const Tensor& g = t.grad(self);
                             if (t.requires_grad(ia)) {
                                 Tensor& ga = t.grad_buffer(ia);
                                 for (std::size_t i = 0; i < m1 * n; ++i) ga[i] += g[i];
                             }
                             if (t.requires_grad(ib)) {
                                 Tensor& gb = t.grad_buffer(ib);
                                 for (std::size_t i = 0; i < m2 * n; ++i) gb[i] += g[m1 * n + i];
                             }
                         });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
    Tape& tape = parts[0].tape();
    const std::size_t m = parts[0].value().rows();
    std::size_t total = 0;
    bool rg = false;
    std::vector<std::uint32_t> ids;
    std::vector<std::size_t> widths;
    for (const auto& p : parts) {
        check_same_tape(parts[0], p);
        require_rank2(p.value(), "concat_cols");
        if (p.value().rows() != m) throw InvalidArgument("concat_cols: row mismatch");
        ids.push_back(p.id());
        widths.push_back(p.value().cols());
        total += p.value().cols();
        rg = rg || p.requires_grad();
    }
    Tensor out = Tensor::matrix(m, total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const Tensor& x = p.value();
        const std::size_t w = x.cols();
        for (std::size_t i = 0; i < m; ++i) std::copy_n(x.data() + i * w, w, out.data() + i * total + off);
        off += w;
    }
    return tape.push(std::move(out), rg, [ids, widths, m, total](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const std::size_t w = widths[k];
            if (t.requires_grad(ids[k])) {
                Tensor& gk = t.grad_buffer(ids[k]);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < w; ++j) gk[i * w + j] += g[i * total + off + j];
            }
            off += w;
        }
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
    const Tensor& x = a.value();
    require_rank2(x, "slice_rows");
    if (begin > end || end > x.rows()) throw InvalidArgument("slice_rows: invalid range");
    const std::size_t n = x.cols();
    Tensor out = Tensor::matrix(end - begin, n);
    std::copy_n(x.data() + begin * n, (end - begin) * n, out.data());
    const auto ia = a.id();
    return a.tape().push(std::move(out), a.requires_grad(), [ia, begin, end, n](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < (end - begin) * n; ++i) ga[begin * n + i] += g[i];
    });
}

Var sum_all(Var a) {
    const Tensor& x = a.value();
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
    const auto ia = a.id();
    return a.tape().push(Tensor::scalar(s), a.requires_grad(), [ia](Tape& t, std::uint32_t self) {
        const double g = t.grad(self)[0];
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
}

namespace {

Var reduce_rows(Var a, double factor) {
    const Tensor& x = a.value();
    require_rank2(x, "sum_rows");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out = Tensor::matrix(1, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += x[i * n + j];
    for (std::size_t j = 0; j < n; ++j) out[j] *= factor;
    const auto ia = a.id();
    return a.tape().push(std::move(out), a.requires_grad(), [ia, m, n, factor](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += factor * g[j];
    });
}

}  // namespace

Var sum_rows(Var a) { return reduce_rows(a, 1.0); }

Var mean_rows(Var a) {
    if (a.value().rows() == 0) throw InvalidArgument("mean_rows: empty input");
    return reduce_rows(a, 1.0 / static_cast<double>(a.value().rows()));
}

Var pick(Var a, std::size_t row, std::size_t col) {
    const Tensor& x = a.value();
    require_rank2(x, "pick");
    if (row >= x.rows() || col >= x.cols()) throw InvalidArgument("pick: index out of range");
    const std::size_t idx = row * x.cols() + col;
    const auto ia = a.id();
    return a.tape().push(Tensor::scalar(x[idx]), a.requires_grad(), [ia, idx](Tape& t, std::uint32_t self) {
        t.grad_buffer(ia)[idx] += t.grad(self)[0];
    });
}

Var attention(Var q, Var k, Var v, const AttentionOptions& opt) {
    check_same_tape(q, k);
    check_same_tape(q, v);
    const Tensor& Q = q.value();
    const Tensor& K = k.value();
    const Tensor& V = v.value();
    require_rank2(Q, "attention");
    require_rank2(K, "attention");
    require_rank2(V, "attention");
    const std::size_t tq = Q.rows(), tk = K.rows(), d = Q.cols(), h = opt.heads;
    if (K.cols() != d || V.cols() != d || V.rows() != tk) throw InvalidArgument("attention: shape mismatch");
    if (h == 0 || d % h != 0) throw InvalidArgument("attention: model dim not divisible by heads");
    if (opt.prefix_len > tk) throw InvalidArgument("attention: prefix longer than keys");
    const std::size_t hd = d / h, np = opt.prefix_len;
    const double sc = 1.0 / std::sqrt(static_cast<double>(hd));
    // Masked prefix rows are dropped from the key range entirely.
    const std::size_t j0 = opt.mask_prefix ? np : 0;
    const std::size_t nk = tk - j0;
    const bool causal = opt.causal;
    // Number of visible keys (relative to j0) for query row i.
    auto visible = [=](std::size_t i) -> std::size_t {
        if (!causal) return nk;
        const std::size_t lead = np - j0;
        return std::min(nk, lead + i + 1);
    };
    const int D = static_cast<int>(d), NK = static_cast<int>(nk), TQ = static_cast<int>(tq), HD = static_cast<int>(hd);

    // probs[head][i][j], j relative to j0
    std::vector<double> probs(h * tq * nk, 0.0);
    Tensor out = Tensor::matrix(tq, d);
    if (nk > 0 && tq > 0) {
        for (std::size_t hh = 0; hh < h; ++hh) {
            const std::size_t c0 = hh * hd;
            double* P = probs.data() + hh * tq * nk;
            gemm(false, true, TQ, NK, HD, sc, Q.data() + c0, D, K.data() + j0 * d + c0, D, 0.0, P, NK);
            for (std::size_t i = 0; i < tq; ++i) {
                double* p = P + i * nk;
                const std::size_t n = visible(i);
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, p[j]);
                double z = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    p[j] = std::exp(p[j] - mx);
                    z += p[j];
                }
                for (std::size_t j = 0; j < n; ++j) p[j] /= z;
                for (std::size_t j = n; j < nk; ++j) p[j] = 0.0;
            }
            gemm(false, false, TQ, HD, NK, 1.0, P, NK, V.data() + j0 * d + c0, D, 0.0, out.data() + c0, D);
        }
    }

    const auto iq = q.id(), ik = k.id(), iv = v.id();
    const bool rg = q.requires_grad() || k.requires_grad() || v.requires_grad();
    return q.tape().push(
        std::move(out), rg,
        [iq, ik, iv, tq, nk, j0, d, h, hd, sc, probs = std::move(probs)](Tape& t, std::uint32_t self) {
            if (nk == 0 || tq == 0) return;
            const Tensor& G = t.grad(self);
            const Tensor& Q = t.value(iq);
            const Tensor& K = t.value(ik);
            const Tensor& V = t.value(iv);
            const bool gq = t.requires_grad(iq), gk = t.requires_grad(ik), gv = t.requires_grad(iv);
            const int D = static_cast<int>(d), NK = static_cast<int>(nk), TQ = static_cast<int>(tq),
                      HD = static_cast<int>(hd);
            std::vector<double> dS(tq * nk);
            for (std::size_t hh = 0; hh < h; ++hh) {
                const std::size_t c0 = hh * hd;
                const double* P = probs.data() + hh * tq * nk;
                if (gv)
                    gemm(true, false, NK, HD, TQ, 1.0, P, NK, G.data() + c0, D, 1.0, t.grad_buffer(iv).data() + j0 * d + c0, D);
                if (!gq && !gk) continue;
                // dP = G V^T, then dS = P * (dP - rowdot(P, dP)) * sc
                gemm(false, true, TQ, NK, HD, 1.0, G.data() + c0, D, V.data() + j0 * d + c0, D, 0.0, dS.data(), NK);
                for (std::size_t i = 0; i < tq; ++i) {
                    const double* p = P + i * nk;
                    double* ds = dS.data() + i * nk;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < nk; ++j) dot += p[j] * ds[j];
                    for (std::size_t j = 0; j < nk; ++j) ds[j] = p[j] * (ds[j] - dot) * sc;
                }
                if (gq)
                    gemm(false, false, TQ, HD, NK, 1.0, dS.data(), NK, K.data() + j0 * d + c0, D, 1.0, t.grad_buffer(iq).data() + c0, D);
                if (gk)
                    gemm(true, false, NK, HD, TQ, 1.0, dS.data(), NK, Q.data() + c0, D, 1.0, t.grad_buffer(ik).data() + j0 * d + c0, D);
            }
        });
}

Var cross_entropy(Var logits, std::span<const int> targets, int pad_id) {
    const Tensor& x = logits.value();
    require_rank2(x, "cross_entropy");
    const std::size_t m = x.rows(), n = x.cols();
    if (targets.size() != m) throw InvalidArgument("cross_entropy: target count does not match logits rows");
    std::size_t count = 0;
    for (int y : targets) {
        if (y == pad_id) continue;
        if (y < 0 || static_cast<std::size_t>(y) >= n) throw InvalidArgument("cross_entropy: target out of range");
        ++count;
    }
    if (count == 0) throw InvalidArgument("cross_entropy: every target position is padding");

    Tensor probs(x.shape());
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* r = x.data() + i * n;
        const double mx = *std::max_element(r, r + n);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += (probs[i * n + j] = std::exp(r[j] - mx));
        for (std::size_t j = 0; j < n; ++j) probs[i * n + j] /= z;
        if (targets[i] != pad_id) loss -= r[static_cast<std::size_t>(targets[i])] - mx - std::log(z);
    }
    loss /= static_cast<double>(count);
    const auto il = logits.id();
    return logits.tape().push(
        Tensor::scalar(loss), logits.requires_grad(),
        [il, m, n, count, probs = std::move(probs), tg = std::vector<int>(targets.begin(), targets.end()),
         pad_id](Tape& t, std::uint32_t self) {
            const double g = t.grad(self)[0] / static_cast<double>(count);
            Tensor& gl = t.grad_buffer(il);
            for (std::size_t i = 0; i < m; ++i) {
                if (tg[i] == pad_id) continue;
                for (std::size_t j = 0; j < n; ++j) gl[i * n + j] += g * probs[i * n + j];
                gl[i * n + static_cast<std::size_t>(tg[i])] -= g;
            }
        });
}

}  // namespace plasma::nn
