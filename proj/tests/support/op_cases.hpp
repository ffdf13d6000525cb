#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "support/gradcheck.hpp"

namespace plasma::testing {

struct OpCase {
    const char* name;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    bool positive = false;
    std::function<nn::Var(nn::Tape&, std::vector<nn::Var>&)> build;
};

/// Weighted sum so every output element gets a distinct upstream gradient.
inline nn::Var weigh(nn::Tape& tape, nn::Var out, std::uint64_t seed = 99) {
    Rng rng(seed);
    return nn::sum_all(nn::mul(out, tape.constant(random_tensor(rng, out.value().rows(), out.value().cols()))));
}

/// One case per differentiable op, attention in each masking mode.
inline std::vector<OpCase> op_cases() {
    using namespace plasma::nn;
    static const std::vector<int> ids{2, 0, 3, 2};
    static const std::vector<int> cols{4, 1, 1};
    static const std::vector<int> targets{1, 0, 4};
    const Tensor cap = Tensor::matrix(3, 4, 0.3);
    return {
        {"matmul", {{3, 4}, {4, 2}}, false, [](Tape&, auto& v) { return matmul(v[0], v[1]); }},
        {"matmul wide", {{5, 32}, {32, 300}}, false, [](Tape&, auto& v) { return matmul(v[0], v[1]); }},
        {"matmul wide inner", {{5, 300}, {300, 32}}, false, [](Tape&, auto& v) { return matmul(v[0], v[1]); }},
        {"transpose", {{3, 4}}, false, [](Tape&, auto& v) { return transpose(v[0]); }},
        {"add", {{3, 4}, {3, 4}}, false, [](Tape&, auto& v) { return add(v[0], v[1]); }},
        {"sub", {{3, 4}, {3, 4}}, false, [](Tape&, auto& v) { return sub(v[0], v[1]); }},
        {"mul", {{3, 4}, {3, 4}}, false, [](Tape&, auto& v) { return mul(v[0], v[1]); }},
        {"add_row", {{3, 4}, {1, 4}}, false, [](Tape&, auto& v) { return add_row(v[0], v[1]); }},
        {"mul_row", {{3, 4}, {1, 4}}, false, [](Tape&, auto& v) { return mul_row(v[0], v[1]); }},
        {"scale", {{3, 4}}, false, [](Tape&, auto& v) { return scale(v[0], -1.7); }},
        {"add_scalar", {{3, 4}}, false, [](Tape&, auto& v) { return mul(add_scalar(v[0], 0.4), v[0]); }},
        {"relu", {{3, 4}}, false, [](Tape&, auto& v) { return relu(v[0]); }},
        {"exp", {{3, 4}}, false, [](Tape&, auto& v) { return exp(v[0]); }},
        {"log", {{3, 4}}, true, [](Tape&, auto& v) { return log(v[0]); }},
        {"reciprocal", {{3, 4}}, false, [](Tape&, auto& v) { return reciprocal(v[0]); }},
        {"clamp_min", {{3, 4}}, false, [](Tape&, auto& v) { return clamp_min(v[0], 0.05); }},
        {"min_const", {{3, 4}}, false, [cap](Tape&, auto& v) { return min_const(v[0], cap); }},
        {"softmax_rows", {{3, 4}}, false, [](Tape&, auto& v) { return softmax_rows(v[0]); }},
        {"log_softmax_rows", {{3, 4}}, false, [](Tape&, auto& v) { return log_softmax_rows(v[0]); }},
        {"layer_norm_rows", {{3, 4}}, false, [](Tape&, auto& v) { return layer_norm_rows(v[0]); }},
        {"l2_normalize_rows", {{3, 4}}, false, [](Tape&, auto& v) { return l2_normalize_rows(v[0]); }},
        {"embedding", {{5, 3}}, false, [](Tape&, auto& v) { return embedding(v[0], ids); }},
        {"gather_cols", {{3, 5}}, false, [](Tape&, auto& v) { return gather_cols(v[0], cols); }},
        {"concat_rows", {{2, 3}, {3, 3}}, false, [](Tape&, auto& v) { return concat_rows(v[0], v[1]); }},
        {"concat_cols", {{3, 2}, {3, 3}}, false,
         [](Tape&, auto& v) { return concat_cols(std::vector<Var>{v[0], v[1], v[0]}); }},
        {"slice_rows", {{5, 3}}, false, [](Tape&, auto& v) { return slice_rows(v[0], 1, 4); }},
        {"sum_all", {{3, 4}}, false, [](Tape&, auto& v) { return mul(sum_all(v[0]), sum_all(v[0])); }},
        {"sum_rows", {{3, 4}}, false, [](Tape&, auto& v) { return sum_rows(v[0]); }},
        {"mean_rows", {{3, 4}}, false, [](Tape&, auto& v) { return mean_rows(v[0]); }},
        {"pick", {{3, 4}}, false, [](Tape&, auto& v) { return mul(pick(v[0], 2, 1), pick(v[0], 0, 3)); }},
        {"cross_entropy", {{3, 5}}, false, [](Tape&, auto& v) { return cross_entropy(v[0], targets, 0); }},
        {"attention", {{3, 4}, {5, 4}, {5, 4}}, false,
         [](Tape&, auto& v) { return attention(v[0], v[1], v[2], {.heads = 2}); }},
        {"attention causal prefix", {{3, 4}, {5, 4}, {5, 4}}, false,
         [](Tape&, auto& v) { return attention(v[0], v[1], v[2], {.heads = 2, .causal = true, .prefix_len = 2}); }},
        {"attention masked prefix", {{3, 4}, {5, 4}, {5, 4}}, false,
         [](Tape&, auto& v) {
             return attention(v[0], v[1], v[2], {.heads = 2, .causal = true, .prefix_len = 2, .mask_prefix = true});
         }},
        {"attention cross prefix", {{2, 6}, {6, 6}, {6, 6}}, false,
         [](Tape&, auto& v) { return attention(v[0], v[1], v[2], {.heads = 3, .prefix_len = 3}); }},
    };
}

inline GradCheck check_op(const OpCase& c, Rng& rng) {
    nn::ParamSet ps;
    for (std::size_t i = 0; i < c.shapes.size(); ++i) {
        nn::Tensor t = away_from_zero(rng, c.shapes[i].first, c.shapes[i].second);
        if (c.positive)
            for (auto& x : t.values()) x = std::abs(x) + 0.2;
        ps.add("x" + std::to_string(i), t);
    }
    return grad_check(ps, nn::TrainMask::all_of(ps), [&](nn::Tape& tape, const nn::Bound& b) {
        std::vector<nn::Var> v;
        for (std::size_t i = 0; i < c.shapes.size(); ++i) v.push_back(b["x" + std::to_string(i)]);
        nn::Var out = c.build(tape, v);
        return out.value().size() == 1 ? out : weigh(tape, out);
    });
}

}  // namespace plasma::testing
