#include "plasma/nn/transformer.hpp"

#include <cmath>
#include <json.hpp>

#include "plasma/nn/vocab.hpp"
#include "plasma/util/error.hpp"
#include "plasma/util/rng.hpp"

namespace plasma::nn {

using nlohmann::json;

void ModelConfig::validate() const {
    if (vocab_size <= static_cast<std::size_t>(kReservedCount)) throw InvalidArgument("model vocab_size must exceed 4");
    if (heads == 0 || d_model == 0 || d_model % heads != 0)
        throw InvalidArgument("model d_model must be a positive multiple of heads");
    if (d_ff == 0 || max_len == 0) throw InvalidArgument("model d_ff and max_len must be positive");
    if (enc_layers == 0 || dec_layers == 0) throw InvalidArgument("model needs at least one encoder and decoder layer");
}

std::string ModelConfig::to_json() const {
    json j = {{"vocab_size", vocab_size}, {"enc_layers", enc_layers}, {"dec_layers", dec_layers}, {"heads", heads},
              {"d_model", d_model},       {"d_ff", d_ff},             {"max_len", max_len}};
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    ModelConfig c;
    try {
        auto j = json::parse(text);
        c.vocab_size = j.at("vocab_size").get<std::size_t>();
        c.enc_layers = j.at("enc_layers").get<std::size_t>();
        c.dec_layers = j.at("dec_layers").get<std::size_t>();
        c.heads = j.at("heads").get<std::size_t>();
        c.d_model = j.at("d_model").get<std::size_t>();
        c.d_ff = j.at("d_ff").get<std::size_t>();
        c.max_len = j.at("max_len").get<std::size_t>();
    } catch (const json::exception& e) {
        throw IoError(std::string("bad model config: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

Tensor xavier(Rng& rng, std::size_t rows, std::size_t cols) {
    Tensor t = Tensor::matrix(rows, cols);
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (auto& x : t.values()) x = rng.uniform(-a, a);
    return t;
}

void add_attention(ParamSet& p, Rng& rng, const std::string& name, std::size_t d) {
    for (const char* w : {".wq", ".wk", ".wv", ".wo"}) p.add(name + w, xavier(rng, d, d));
}

void add_norm(ParamSet& p, const std::string& name, std::size_t d) {
    p.add(name + ".g", Tensor::matrix(1, d, 1.0));
    p.add(name + ".b", Tensor::matrix(1, d, 0.0));
}

void add_ff(ParamSet& p, Rng& rng, const std::string& name, std::size_t d, std::size_t ff) {
    p.add(name + ".w1", xavier(rng, d, ff));
    p.add(name + ".b1", Tensor::matrix(1, ff));
    p.add(name + ".w2", xavier(rng, ff, d));
    p.add(name + ".b2", Tensor::matrix(1, d));
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    ModelParams m;
    m.config = config;
    auto& p = m.params;
    const std::size_t d = config.d_model;
    Tensor emb = Tensor::matrix(config.vocab_size, d);
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (auto& x : emb.values()) x = rng.normal(0.0, s);
    for (std::size_t j = 0; j < d; ++j) emb(static_cast<std::size_t>(kPad), j) = 0.0;
    p.add("embed", std::move(emb));
    for (std::size_t l = 0; l < config.enc_layers; ++l) {
        const std::string n = "enc." + std::to_string(l);
        add_norm(p, n + ".ln1", d);
        add_attention(p, rng, n + ".self", d);
        add_norm(p, n + ".ln2", d);
        add_ff(p, rng, n + ".ff", d, config.d_ff);
    }
    add_norm(p, "enc.ln_f", d);
    for (std::size_t l = 0; l < config.dec_layers; ++l) {
        const std::string n = "dec." + std::to_string(l);
        add_norm(p, n + ".ln1", d);
        add_attention(p, rng, n + ".self", d);
        add_norm(p, n + ".ln2", d);
        add_attention(p, rng, n + ".cross", d);
        add_norm(p, n + ".ln3", d);
        add_ff(p, rng, n + ".ff", d, config.d_ff);
    }
    add_norm(p, "dec.ln_f", d);
    p.add("out.w", xavier(rng, d, config.vocab_size));
    p.add("out.b", Tensor::matrix(1, config.vocab_size));
    return m;
}

std::string PrefixParams::group(std::string_view side, std::size_t layer, std::string_view stream, char kv) {
    std::string s = "prefix.";
    s += side;
    s += '.';
    s += std::to_string(layer);
    s += '.';
    s += stream;
    s += '.';
    s += kv;
    return s;
}

PrefixParams PrefixParams::init(const ModelConfig& config, std::size_t prefix_len, double init_scale,
                                std::uint64_t seed) {
    config.validate();
    if (prefix_len == 0) throw InvalidArgument("prefix_len must be at least 1");
    Rng rng(seed);
    PrefixParams pp;
    pp.prefix_len = prefix_len;
    auto make = [&] {
        Tensor t = Tensor::matrix(prefix_len, config.d_model);
        if (init_scale != 0.0)
            for (auto& x : t.values()) x = rng.normal(0.0, init_scale);
        return t;
    };
    for (std::size_t l = 0; l < config.enc_layers; ++l)
        for (char kv : {'k', 'v'}) pp.params.add(group("enc", l, "self", kv), make());
    for (std::size_t l = 0; l < config.dec_layers; ++l)
        for (const char* stream : {"self", "cross"})
            for (char kv : {'k', 'v'}) pp.params.add(group("dec", l, stream, kv), make());
    return pp;
}

Tensor positional_encoding(std::size_t len, std::size_t d) {
    Tensor t = Tensor::matrix(len, d);
    for (std::size_t pos = 0; pos < len; ++pos)
        for (std::size_t i = 0; i < d; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
            const double a = static_cast<double>(pos) * rate;
            t(pos, i) = (i % 2 == 0) ? std::sin(a) : std::cos(a);
        }
    return t;
}

std::vector<int> shift_right(std::span<const int> target) {
    std::vector<int> v{kBos};
    v.insert(v.end(), target.begin(), target.end());
    return v;
}

std::vector<int> with_eos(std::span<const int> target) {
    std::vector<int> v(target.begin(), target.end());
    v.push_back(kEos);
    return v;
}

Transformer::Transformer(const ModelConfig& config, const Bound& model, const Bound* prefix, std::size_t prefix_len,
                         bool mask_prefix)
    : config_(config), model_(model), prefix_(prefix), prefix_len_(prefix ? prefix_len : 0), mask_prefix_(mask_prefix) {}

Tape& Transformer::tape() const { return model_["embed"].tape(); }

Var Transformer::embed(std::span<const int> ids) const {
    if (ids.empty()) throw InvalidArgument("empty token sequence");
    if (ids.size() > config_.max_len)
        throw InvalidArgument("sequence length " + std::to_string(ids.size()) + " exceeds max_len");
    Var e = scale(embedding(model_["embed"], ids), std::sqrt(static_cast<double>(config_.d_model)));
    return add(e, tape().constant(positional_encoding(ids.size(), config_.d_model)));
}

Var Transformer::norm(Var x, const std::string& name) const {
    return add_row(mul_row(layer_norm_rows(x), model_[name + ".g"]), model_[name + ".b"]);
}

std::pair<Var, Var> Transformer::project_kv(Var x_kv, const std::string& name, const std::string& prefix_key) const {
    Var k = matmul(x_kv, model_[name + ".wk"]);
    Var v = matmul(x_kv, model_[name + ".wv"]);
    if (prefix_) {
        k = concat_rows((*prefix_)[prefix_key + ".k"], k);
        v = concat_rows((*prefix_)[prefix_key + ".v"], v);
    }
    return {k, v};
}

Var Transformer::attend_kv(Var x_q, Var k, Var v, const std::string& name, bool causal) const {
    Var q = matmul(x_q, model_[name + ".wq"]);
    AttentionOptions opt;
    opt.heads = config_.heads;
    opt.causal = causal;
    if (prefix_) {
        opt.prefix_len = prefix_len_;
        opt.mask_prefix = mask_prefix_;
    }
    return matmul(attention(q, k, v, opt), model_[name + ".wo"]);
}

Var Transformer::attend(Var x_q, Var x_kv, const std::string& name, const std::string& prefix_key, bool causal) const {
    auto [k, v] = project_kv(x_kv, name, prefix_key);
    return attend_kv(x_q, k, v, name, causal);
}

Var Transformer::feed_forward(Var x, const std::string& name) const {
    Var h = relu(add_row(matmul(x, model_[name + ".w1"]), model_[name + ".b1"]));
    return add_row(matmul(h, model_[name + ".w2"]), model_[name + ".b2"]);
}

Var Transformer::encode(std::span<const int> src) const {
    Var x = embed(src);
    for (std::size_t l = 0; l < config_.enc_layers; ++l) {
        const std::string n = "enc." + std::to_string(l);
        const std::string pk = "prefix.enc." + std::to_string(l) + ".self";
        Var h = norm(x, n + ".ln1");
        x = add(x, attend(h, h, n + ".self", pk, false));
        x = add(x, feed_forward(norm(x, n + ".ln2"), n + ".ff"));
    }
    return norm(x, "enc.ln_f");
}

Var Transformer::decode(Var memory, std::span<const int> tgt_in) const {
    Var x = embed(tgt_in);
    for (std::size_t l = 0; l < config_.dec_layers; ++l) {
        const std::string n = "dec." + std::to_string(l);
        const std::string pk = "prefix.dec." + std::to_string(l);
        Var h = norm(x, n + ".ln1");
        x = add(x, attend(h, h, n + ".self", pk + ".self", true));
        if (&memory.tape() != &tape()) throw InvalidArgument("decode: memory lives on a different tape");
        auto it = cross_cache_.find({memory.id(), l});
        if (it == cross_cache_.end())
            it = cross_cache_.emplace(std::make_pair(memory.id(), l), project_kv(memory, n + ".cross", pk + ".cross")).first;
        x = add(x, attend_kv(norm(x, n + ".ln2"), it->second.first, it->second.second, n + ".cross", false));
        x = add(x, feed_forward(norm(x, n + ".ln3"), n + ".ff"));
    }
    return add_row(matmul(norm(x, "dec.ln_f"), model_["out.w"]), model_["out.b"]);
}

}  // namespace plasma::nn
