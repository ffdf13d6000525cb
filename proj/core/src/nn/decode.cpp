#include "plasma/nn/decode.hpp"

#include <cmath>
#include <limits>

#include "plasma/nn/vocab.hpp"
#include "plasma/util/error.hpp"
#include "plasma/util/rng.hpp"

namespace plasma::nn {

DecodeResult decode_with(const Transformer& tf, Var memory, std::size_t vocab_size, const DecodeOptions& options) {
    if (options.max_len == 0) throw InvalidArgument("decode max_len must be at least 1");
    if (options.mode == DecodeMode::Sample && !(options.temperature > 0.0))
        throw InvalidArgument("sampling temperature must be positive");
    Rng rng(options.seed);
    DecodeResult out;
    std::vector<int> tgt_in{kBos};
    auto banned = [&](std::size_t v) {
        if (v == static_cast<std::size_t>(kPad) || v == static_cast<std::size_t>(kBos)) return true;
        return !options.stop_at_eos && (v == static_cast<std::size_t>(kEos) || v == static_cast<std::size_t>(kUnk));
    };
    const double temp = options.mode == DecodeMode::Sample ? options.temperature : 1.0;
    for (std::size_t step = 0; step < options.max_len; ++step) {
        Var logits = tf.decode(memory, tgt_in);
        auto last = logits.value().row_view(tgt_in.size() - 1);
        std::vector<double> p(vocab_size);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < vocab_size; ++v) mx = std::max(mx, last[v] / temp);
        double z = 0.0;
        for (std::size_t v = 0; v < vocab_size; ++v) z += (p[v] = std::exp(last[v] / temp - mx));
        for (auto& x : p) x /= z;

        std::size_t pick = 0;
        if (options.mode == DecodeMode::Greedy) {
            double best = -1.0;
            for (std::size_t v = 0; v < vocab_size; ++v)
                if (!banned(v) && p[v] > best) {
                    best = p[v];
                    pick = v;
                }
        } else {
            double mass = 0.0;
            for (std::size_t v = 0; v < vocab_size; ++v)
                if (!banned(v)) mass += p[v];
            double u = rng.uniform() * mass;
            pick = vocab_size;
            for (std::size_t v = 0; v < vocab_size; ++v) {
                if (banned(v)) continue;
                pick = v;
                u -= p[v];
                if (u < 0.0) break;
            }
        }
        out.probs.push_back(std::move(p));
        if (options.stop_at_eos && pick == static_cast<std::size_t>(kEos)) break;
        out.ids.push_back(static_cast<int>(pick));
        tgt_in.push_back(static_cast<int>(pick));
    }
    return out;
}

DecodeResult decode(const ModelParams& model, const PrefixParams* prefix, std::span<const int> src,
                    const DecodeOptions& options) {
    Tape tape;
    Bound mb(tape, model.params, TrainMask{});
    Bound pb;
    if (prefix) pb = Bound(tape, prefix->params, TrainMask{});
    Transformer tf(model.config, mb, prefix ? &pb : nullptr, prefix ? prefix->prefix_len : 0);
    Var memory = tf.encode(src);
    return decode_with(tf, memory, model.config.vocab_size, options);
}

}  // namespace plasma::nn
