#include "plasma/nn/optim.hpp"

#include <cmath>

#include "plasma/util/error.hpp"

namespace plasma::nn {

Adam::Adam(const ParamSet& params, TrainMask mask, AdamOptions options) : mask_(std::move(mask)), options_(options) {
    for (const auto& name : mask_.names()) {
        if (!params.contains(name)) throw InvalidArgument("train mask names unknown group " + name);
        m_.emplace(name, Tensor(params.get(name).shape(), 0.0));
        v_.emplace(name, Tensor(params.get(name).shape(), 0.0));
    }
}

void Adam::step(ParamSet& params, const std::unordered_map<std::string, Tensor>& grads) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
        if (!mask_.trainable(name)) throw InvalidArgument("gradient supplied for frozen group " + name);
        if (!g.same_shape(params.get(name))) throw InvalidArgument("gradient shape mismatch for " + name);
        if (!g.all_finite()) throw NumericError("non-finite gradient for " + name);
        for (double x : g.values()) sq += x * x;
    }
    double factor = 1.0;
    if (options_.clip_norm > 0.0) {
        const double norm = std::sqrt(sq);
        if (norm > options_.clip_norm) factor = options_.clip_norm / norm;
    }
    ++t_;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (const auto& name : mask_.names()) {
        Tensor& p = params.get(name);
        Tensor& m = m_.at(name);
        Tensor& v = v_.at(name);
        auto it = grads.find(name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = it == grads.end() ? 0.0 : factor * it->second[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            if (m[i] == 0.0) continue;
            p[i] -= options_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + options_.eps);
        }
    }
}

}  // namespace plasma::nn
