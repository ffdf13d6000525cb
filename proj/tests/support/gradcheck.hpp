#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "plasma/nn/params.hpp"
#include "plasma/nn/tape.hpp"
#include "plasma/util/rng.hpp"

namespace plasma::testing {

/// Builds a scalar loss from parameter groups bound on a fresh tape.
using LossFn = std::function<nn::Var(nn::Tape&, const nn::Bound&)>;

struct GradCheck {
    double max_rel_error = 0.0;
    std::string worst;
    double worst_analytic = 0.0, worst_numeric = 0.0;
    std::size_t scalars = 0;
};

/// |a - n| / max(|a|, |n|, floor).
inline double rel_error(double a, double n, double floor = 1e-6) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Central differences (step h) for every scalar of every group in `mask`.
inline GradCheck grad_check(nn::ParamSet params, const nn::TrainMask& mask, const LossFn& f, double h = 1e-5) {
    std::unordered_map<std::string, nn::Tensor> analytic;
    {
        nn::Tape tape;
        nn::Bound b(tape, params, mask);
        nn::Var loss = f(tape, b);
        tape.backward(loss);
        analytic = b.gradients(params, mask);
    }
    auto eval = [&] {
        nn::Tape tape;
        nn::Bound b(tape, params, nn::TrainMask{});
        return f(tape, b).value().item();
    };
    GradCheck out;
    for (const auto& name : mask.names()) {
        nn::Tensor& t = params.get(name);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double x = t[i];
            t[i] = x + h;
            const double up = eval();
            t[i] = x - h;
            const double down = eval();
            t[i] = x;
            const double num = (up - down) / (2 * h);
            const double err = rel_error(analytic.at(name)[i], num);
            ++out.scalars;
            if (err > out.max_rel_error) {
                out.max_rel_error = err;
                out.worst = name + "[" + std::to_string(i) + "]";
                out.worst_analytic = analytic.at(name)[i];
                out.worst_numeric = num;
            }
        }
    }
    return out;
}

inline nn::Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    nn::Tensor t = nn::Tensor::matrix(r, c);
    for (auto& x : t.values()) x = rng.uniform(lo, hi);
    return t;
}

/// Values bounded away from 0 so kinks (relu, clamps) are not straddled.
inline nn::Tensor away_from_zero(Rng& rng, std::size_t r, std::size_t c) {
    nn::Tensor t = nn::Tensor::matrix(r, c);
    for (auto& x : t.values()) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
    return t;
}

}  // namespace plasma::testing
