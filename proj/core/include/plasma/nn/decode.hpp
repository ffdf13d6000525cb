#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "plasma/nn/transformer.hpp"

namespace plasma::nn {

enum class DecodeMode { Greedy, Sample };

struct DecodeOptions {
    DecodeMode mode = DecodeMode::Greedy;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    std::size_t max_len = 32;
    /// When false, exactly max_len tokens are produced and EOS/UNK are never
    /// selected.
    bool stop_at_eos = true;
};

struct DecodeResult {
    std::vector<int> ids;                      // generated tokens, EOS excluded
    std::vector<std::vector<double>> probs;    // one distribution per step
};

/// Autoregressive decoding. PAD and BOS are never selected; ties in greedy
/// mode go to the smallest id.
DecodeResult decode(const ModelParams& model, const PrefixParams* prefix, std::span<const int> src,
                    const DecodeOptions& options);

/// Decoding against an already-built transformer and encoder output.
DecodeResult decode_with(const Transformer& tf, Var memory, std::size_t vocab_size, const DecodeOptions& options);

}  // namespace plasma::nn
