#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>

#include "plasma/nn/params.hpp"

namespace plasma::nn {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Global gradient-norm clip; 0 disables.
    double clip_norm = 0.0;
};

/// Adam restricted to the groups of a TrainMask.
class Adam {
public:
    Adam(const ParamSet& params, TrainMask mask, AdamOptions options = {});

    /// Applies one update. A gradient for a group outside the mask is an
    /// error; masked groups without a gradient are treated as zero.
    void step(ParamSet& params, const std::unordered_map<std::string, Tensor>& grads);

    std::size_t steps() const { return t_; }
    const TrainMask& mask() const { return mask_; }
    AdamOptions& options() { return options_; }

private:
    TrainMask mask_;
    AdamOptions options_;
    std::unordered_map<std::string, Tensor> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace plasma::nn
