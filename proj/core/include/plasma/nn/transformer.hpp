#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "plasma/nn/params.hpp"

namespace plasma::nn {

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t enc_layers = 2;
    std::size_t dec_layers = 2;
    std::size_t heads = 4;
    std::size_t d_model = 64;
    std::size_t d_ff = 128;
    std::size_t max_len = 512;

    std::size_t head_dim() const { return d_model / heads; }
    /// Throws InvalidArgument on inconsistent dimensions.
    void validate() const;
    bool operator==(const ModelConfig&) const = default;

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

/// Pre-LN encoder-decoder transformer weights.
struct ModelParams {
    ModelConfig config;
    ParamSet params;

    static ModelParams init(const ModelConfig& config, std::uint64_t seed);
};

/// Key/value prefix rows for every attention stream: encoder self-attention,
/// decoder self-attention and decoder cross-attention. Each matrix is
/// prefix_len x d_model (heads x head_dim), already in projected key/value
/// space.
struct PrefixParams {
    std::size_t prefix_len = 0;
    ParamSet params;

    /// Values drawn from N(0, init_scale^2); init_scale 0 gives zeros.
    static PrefixParams init(const ModelConfig& config, std::size_t prefix_len, double init_scale, std::uint64_t seed);
    /// Group name, e.g. prefix_group("enc", 0, "self", 'k').
    static std::string group(std::string_view side, std::size_t layer, std::string_view stream, char kv);
};

/// Transformer graph builder over bound parameters.
class Transformer {
public:
    /// `prefix` may be null for the plain model. With mask_prefix, prefix
    /// rows are present but never attended, which reproduces the plain model
    /// exactly.
    Transformer(const ModelConfig& config, const Bound& model, const Bound* prefix, std::size_t prefix_len,
                bool mask_prefix = false);

    /// Encoder output [|src| x d].
    Var encode(std::span<const int> src) const;
    /// Decoder logits [|tgt_in| x V] given encoder output.
    Var decode(Var memory, std::span<const int> tgt_in) const;
    /// Teacher-forced logits for decoder inputs tgt_in.
    Var forward(std::span<const int> src, std::span<const int> tgt_in) const { return decode(encode(src), tgt_in); }

    Tape& tape() const;

private:
    Var embed(std::span<const int> ids) const;
    Var norm(Var x, const std::string& name) const;
    Var attend(Var x_q, Var x_kv, const std::string& name, const std::string& prefix_key, bool causal) const;
    Var attend_kv(Var x_q, Var k, Var v, const std::string& name, bool causal) const;
    std::pair<Var, Var> project_kv(Var x_kv, const std::string& name, const std::string& prefix_key) const;
    Var feed_forward(Var x, const std::string& name) const;

    const ModelConfig& config_;
    const Bound& model_;
    const Bound* prefix_;
    std::size_t prefix_len_;
    bool mask_prefix_;
    // Cross-attention keys/values per (memory node, layer), reused across decode calls.
    mutable std::map<std::pair<std::uint32_t, std::size_t>, std::pair<Var, Var>> cross_cache_;
};

/// Sinusoidal position table [len x d].
Tensor positional_encoding(std::size_t len, std::size_t d);

/// Decoder inputs for a target sequence: [BOS, t1, ..., tn].
std::vector<int> shift_right(std::span<const int> target);
/// Decoder targets: [t1, ..., tn, EOS].
std::vector<int> with_eos(std::span<const int> target);

}  // namespace plasma::nn
