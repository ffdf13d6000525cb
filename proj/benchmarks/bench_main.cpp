#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "plasma/metrics/scores.hpp"
#include "plasma/metrics/tokenize.hpp"
#include "plasma/nn/decode.hpp"
#include "plasma/nn/tape.hpp"
#include "plasma/nn/transformer.hpp"
#include "plasma/nn/vocab.hpp"

namespace {

using namespace plasma;

metrics::Tokens random_words(std::mt19937_64& rng, std::size_t n) {
    static const std::vector<std::string> words = {"the",   "pain", "doctor", "it",    "is",   "suggested", "to",
                                                   "take",  "rest", "fever",  "cause", "may",  "be",        "a",
                                                   "virus", "see",  "after",  "days",  "mild", "symptom"};
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    metrics::Tokens out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(words[pick(rng)]);
    return out;
}

nn::Tensor random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
    std::normal_distribution<double> nd(0.0, 1.0);
    nn::Tensor t = nn::Tensor::matrix(r, c);
    for (auto& x : t.storage()) x = nd(rng);
    return t;
}

void BM_RougeL(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = random_words(rng, n), b = random_words(rng, n);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::rouge_l(a, b));
}
BENCHMARK(BM_RougeL)->Arg(16)->Arg(64)->Arg(256);

void BM_Bleu(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = random_words(rng, n);
    std::vector<metrics::Tokens> refs{random_words(rng, n)};
    for (auto _ : state) benchmark::DoNotOptimize(metrics::bleu(a, refs));
}
BENCHMARK(BM_Bleu)->Arg(16)->Arg(64)->Arg(256);

void BM_MatmulBackward(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = random_matrix(rng, n, n), b = random_matrix(rng, n, n);
    for (auto _ : state) {
        nn::Tape tape;
        auto loss = nn::sum_all(nn::matmul(tape.parameter(a), tape.parameter(b)));
        tape.backward(loss);
        benchmark::DoNotOptimize(loss.grad());
    }
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(64)->Arg(128);

void BM_AttentionBackward(benchmark::State& state) {
    std::mt19937_64 rng(4);
    const auto t = static_cast<std::size_t>(state.range(0));
    const std::size_t d = 64, prefix = 8;
    auto q = random_matrix(rng, t, d), kv = random_matrix(rng, t + prefix, d);
    nn::AttentionOptions opt{.heads = 4, .causal = true, .prefix_len = prefix, .mask_prefix = false};
    for (auto _ : state) {
        nn::Tape tape;
        auto k = tape.parameter(kv);
        auto out = nn::attention(tape.parameter(q), k, k, opt);
        tape.backward(nn::sum_all(out));
        benchmark::DoNotOptimize(k.grad());
    }
}
BENCHMARK(BM_AttentionBackward)->Arg(16)->Arg(64)->Arg(128);

struct Model {
    nn::ModelConfig config;
    nn::ModelParams model;
    nn::PrefixParams prefix;
    std::vector<int> src, tgt;

    Model() {
        config.vocab_size = 2000;
        model = nn::ModelParams::init(config, 5);
        prefix = nn::PrefixParams::init(config, 10, 0.02, 6);
        std::mt19937_64 rng(7);
        std::uniform_int_distribution<int> id(nn::kReservedCount, static_cast<int>(config.vocab_size) - 1);
        for (int i = 0; i < 96; ++i) src.push_back(id(rng));
        for (int i = 0; i < 24; ++i) tgt.push_back(id(rng));
    }
};

const Model& model() {
    static const Model m;
    return m;
}

void BM_PrefixTrainStep(benchmark::State& state) {
    const auto& m = model();
    const auto tgt_in = nn::shift_right(m.tgt), tgt_out = nn::with_eos(m.tgt);
    for (auto _ : state) {
        nn::Tape tape;
        nn::Bound base(tape, m.model.params, nn::TrainMask{});
        nn::Bound prefix(tape, m.prefix.params, nn::TrainMask::all_of(m.prefix.params));
        nn::Transformer tf(m.config, base, &prefix, m.prefix.prefix_len);
        auto loss = nn::cross_entropy(tf.forward(m.src, tgt_in), tgt_out, nn::kPad);
        tape.backward(loss);
        benchmark::DoNotOptimize(loss.value());
    }
}
BENCHMARK(BM_PrefixTrainStep)->Unit(benchmark::kMillisecond);

void BM_GreedyDecode(benchmark::State& state) {
    const auto& m = model();
    nn::DecodeOptions opt;
    opt.max_len = 24;
    opt.stop_at_eos = false;
    for (auto _ : state) benchmark::DoNotOptimize(nn::decode(m.model, &m.prefix, m.src, opt));
}
BENCHMARK(BM_GreedyDecode)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
