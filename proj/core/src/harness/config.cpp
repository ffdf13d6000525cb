#include "plasma/harness/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "plasma/util/error.hpp"

namespace plasma::harness {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

/// Reads fields from one JSON object, rejecting keys nobody asked for.
class Reader {
public:
    Reader(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw InvalidArgument("config: " + path_ + " must be an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw InvalidArgument("config: unknown field " + path_ + "." + it.key());
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw InvalidArgument("config: field " + path_ + "." + key + " has the wrong type");
        }
    }
    const ordered_json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    std::string path(const char* key) const { return path_ + "." + key; }

private:
    const ordered_json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_optim(const ordered_json* j, const char* name, OptimConfig& o) {
    if (!j) return;
    Reader r(*j, name);
    r.get("lr", o.lr);
    r.get("epochs", o.epochs);
    r.get("batch_size", o.batch_size);
    r.get("clip_norm", o.clip_norm);
    r.get("seed", o.seed);
}

ordered_json write_optim(const OptimConfig& o) {
    return {{"lr", o.lr}, {"epochs", o.epochs}, {"batch_size", o.batch_size}, {"clip_norm", o.clip_norm}, {"seed", o.seed}};
}

std::string resolve(const std::string& p, const std::string& base) {
    if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

RunConfig RunConfig::from_json(std::string_view text, const std::string& base_dir) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    {
        Reader top(j, "config");
        if (auto* d = top.child("data")) {
            Reader r(*d, "data");
            r.get("corpus", c.corpus);
            r.get("synth_threads", c.synth_threads);
            r.get("synth_seed", c.synth_seed);
            r.get("splits", c.splits);
            std::vector<double> ratios{c.split_ratios.train, c.split_ratios.val, c.split_ratios.test};
            r.get("split_ratios", ratios);
            if (ratios.size() != 3) throw InvalidArgument("config: data.split_ratios needs three values");
            c.split_ratios = {ratios[0], ratios[1], ratios[2]};
            r.get("split_seed", c.split_seed);
            r.get("vocab_max", c.vocab_max);
        }
        if (auto* m = top.child("model")) {
            Reader r(*m, "model");
            r.get("enc_layers", c.model.enc_layers);
            r.get("dec_layers", c.model.dec_layers);
            r.get("heads", c.model.heads);
            r.get("d_model", c.model.d_model);
            r.get("d_ff", c.model.d_ff);
            r.get("max_len", c.model.max_len);
            r.get("max_src_len", c.max_src_len);
            r.get("prefix_len", c.prefix_len);
            r.get("prefix_init", c.prefix_init);
        }
        if (auto* p = top.child("prompt")) {
            Reader r(*p, "prompt");
            std::string parts = c.parts.name(), placement = "before";
            r.get("parts", parts);
            r.get("placement", placement);
            c.parts = prompt::PromptParts::parse(parts == "none" ? "" : parts);
            if (placement == "before") c.placement = prompt::Placement::Before;
            else if (placement == "after") c.placement = prompt::Placement::After;
            else throw InvalidArgument("config: prompt.placement must be before or after");
        }
        if (auto* e = top.child("energy")) {
            Reader r(*e, "energy");
            std::vector<double> alpha{c.weights.alpha1, c.weights.alpha2, c.weights.alpha3};
            r.get("alpha", alpha);
            if (alpha.size() != 3) throw InvalidArgument("config: energy.alpha needs three values");
            c.weights = {alpha[0], alpha[1], alpha[2]};
            std::string anchor = "f1", mode = "free_run";
            r.get("anchor_score", anchor);
            c.anchor_score = energy::parse_anchor_score(anchor);
            r.get("lp_mode", mode);
            if (mode == "free_run") c.lp_mode = LpMode::FreeRun;
            else if (mode == "teacher_forced") c.lp_mode = LpMode::TeacherForced;
            else throw InvalidArgument("config: energy.lp_mode must be free_run or teacher_forced");
            r.get("use_lp", c.use_lp);
            r.get("lexicon", c.lexicon);
            if (auto* k = r.child("classifier")) {
                Reader rc(*k, "energy.classifier");
                rc.get("dim", c.classifier.dim);
                rc.get("epochs", c.classifier.epochs);
                rc.get("batch_size", c.classifier.batch_size);
                rc.get("lr", c.classifier.lr);
                rc.get("init_scale", c.classifier.init_scale);
                rc.get("seed", c.classifier_seed);
            }
        }
        if (auto* p = top.child("pretrain")) {
            ordered_json copy = *p;
            if (copy.contains("input")) {
                if (!copy["input"].is_string()) throw InvalidArgument("config: pretrain.input must be a string");
                c.pretrain_input = copy["input"].get<std::string>();
                copy.erase("input");
            }
            if (copy.contains("target")) {
                if (!copy["target"].is_string()) throw InvalidArgument("config: pretrain.target must be a string");
                c.pretrain_target = copy["target"].get<std::string>();
                copy.erase("target");
            }
            read_optim(&copy, "pretrain", c.pretrain);
        }
        read_optim(top.child("train"), "train", c.train);
        if (auto* d = top.child("decode")) {
            Reader r(*d, "decode");
            std::string mode = "greedy";
            r.get("max_len", c.decode_max_len);
            r.get("mode", mode);
            if (mode != "greedy" && mode != "sample") throw InvalidArgument("config: decode.mode must be greedy or sample");
            c.decode_sample = mode == "sample";
            r.get("temperature", c.decode_temperature);
            r.get("seed", c.decode_seed);
        }
        top.get("seeds", c.seeds);
        top.get("output_dir", c.output_dir);
    }
    c.corpus = resolve(c.corpus, base_dir);
    c.splits = resolve(c.splits, base_dir);
    c.lexicon = resolve(c.lexicon, base_dir);
    c.output_dir = resolve(c.output_dir, base_dir);
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), fs::path(path).parent_path().string());
}

std::string RunConfig::to_json() const {
    ordered_json j;
    j["data"] = {{"corpus", corpus},
                 {"synth_threads", synth_threads},
                 {"synth_seed", synth_seed},
                 {"splits", splits},
                 {"split_ratios", {split_ratios.train, split_ratios.val, split_ratios.test}},
                 {"split_seed", split_seed},
                 {"vocab_max", vocab_max}};
    j["model"] = {{"enc_layers", model.enc_layers}, {"dec_layers", model.dec_layers}, {"heads", model.heads},
                  {"d_model", model.d_model},       {"d_ff", model.d_ff},             {"max_len", model.max_len},
                  {"max_src_len", max_src_len},     {"prefix_len", prefix_len},       {"prefix_init", prefix_init}};
    j["prompt"] = {{"parts", parts.name()}, {"placement", placement == prompt::Placement::Before ? "before" : "after"}};
    const char* anchor = anchor_score == energy::AnchorScore::F1       ? "f1"
                         : anchor_score == energy::AnchorScore::Recall ? "recall"
                                                                       : "precision";
    j["energy"] = {{"alpha", {weights.alpha1, weights.alpha2, weights.alpha3}},
                   {"anchor_score", anchor},
                   {"lp_mode", lp_mode == LpMode::FreeRun ? "free_run" : "teacher_forced"},
                   {"use_lp", use_lp},
                   {"lexicon", lexicon},
                   {"classifier",
                    {{"dim", classifier.dim},
                     {"epochs", classifier.epochs},
                     {"batch_size", classifier.batch_size},
                     {"lr", classifier.lr},
                     {"init_scale", classifier.init_scale},
                     {"seed", classifier_seed}}}};
    j["pretrain"] = write_optim(pretrain);
    j["pretrain"]["input"] = pretrain_input;
    j["pretrain"]["target"] = pretrain_target;
    j["train"] = write_optim(train);
    j["decode"] = {{"max_len", decode_max_len},
                   {"mode", decode_sample ? "sample" : "greedy"},
                   {"temperature", decode_temperature},
                   {"seed", decode_seed}};
    j["seeds"] = seeds;
    j["output_dir"] = output_dir;
    return j.dump(2);
}

void RunConfig::validate() const {
    if (!corpus.empty() && !fs::exists(corpus)) throw InvalidArgument("corpus file not found: " + corpus);
    if (!splits.empty() && !fs::exists(splits)) throw InvalidArgument("split file not found: " + splits);
    if (!lexicon.empty() && !fs::exists(lexicon)) throw InvalidArgument("lexicon file not found: " + lexicon);
    if (corpus.empty() && synth_threads == 0) throw InvalidArgument("synth_threads must be positive");
    const double s = split_ratios.train + split_ratios.val + split_ratios.test;
    if (std::abs(s - 1.0) > 1e-9 || split_ratios.train < 0 || split_ratios.val < 0 || split_ratios.test < 0)
        throw InvalidArgument("split ratios must be nonnegative and sum to 1");
    if (vocab_max <= 4) throw InvalidArgument("vocab_max must exceed 4");
    nn::ModelConfig m = model;
    m.vocab_size = 5;
    m.validate();
    if (max_src_len == 0 || max_src_len > model.max_len) throw InvalidArgument("max_src_len must be in [1, model.max_len]");
    if (decode_max_len == 0 || decode_max_len >= model.max_len) throw InvalidArgument("decode.max_len must be in [1, model.max_len)");
    if (prefix_len == 0) throw InvalidArgument("prefix_len must be at least 1");
    weights.validate();
    for (const auto* o : {&pretrain, &train})
        if (o->batch_size == 0 || !(o->lr > 0.0)) throw InvalidArgument("optimizer batch_size and lr must be positive");
    if (decode_sample && !(decode_temperature > 0.0)) throw InvalidArgument("decode temperature must be positive");
    if (pretrain_input != "content" && pretrain_input != "prompt")
        throw InvalidArgument("pretrain.input must be content or prompt");
    if (pretrain_target != "summary" && pretrain_target != "body")
        throw InvalidArgument("pretrain.target must be summary or body");
    if (seeds.empty()) throw InvalidArgument("at least one seed is required");
}

const std::vector<std::string>& Variant::known() {
    static const std::vector<std::string> ids = {"full",     "no_lp",    "no_Ea",       "no_Et",         "no_Ep",
                                                 "prompt:P", "prompt:D", "prompt:P+D", "prompt:P+D+B", "prompt:P+D+T",
                                                 "placement:after"};
    return ids;
}

namespace {

std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

RunConfig apply_one(const RunConfig& c, const std::string& id) {
    RunConfig r = c;
    if (id == "full") return r;
    if (id == "no_lp") r.use_lp = false;
    else if (id == "no_Ep") r.weights = c.weights.without(1);
    else if (id == "no_Ea") r.weights = c.weights.without(2);
    else if (id == "no_Et") r.weights = c.weights.without(3);
    else if (id.rfind("prompt:", 0) == 0) r.parts = prompt::PromptParts::parse(id.substr(7));
    else if (id == "placement:after") r.placement = prompt::Placement::After;
    else if (id == "placement:before") r.placement = prompt::Placement::Before;
    else throw InvalidArgument("unknown ablation variant '" + id + "'");
    return r;
}

}  // namespace

Variant Variant::parse(std::string_view id) {
    if (id.empty()) throw InvalidArgument("empty ablation variant");
    Variant v{std::string(id)};
    RunConfig probe;
    for (const auto& part : split_on(id, '/')) {
        if (part.empty()) throw InvalidArgument("malformed ablation variant '" + v.id + "'");
        if (part.rfind("prompt:", 0) == 0) prompt::PromptParts::parse(part.substr(7));
        else probe = apply_one(probe, part);
    }
    return v;
}

RunConfig Variant::apply(const RunConfig& base) const {
    RunConfig r = base;
    for (const auto& part : split_on(id, '/')) r = apply_one(r, part);
    return r;
}

std::vector<Variant> parse_matrix(std::string_view spec) {
    std::vector<Variant> out;
    for (const auto& id : split_on(spec, ',')) out.push_back(Variant::parse(id));
    return out;
}

std::vector<std::uint64_t> parse_seeds(std::string_view spec) {
    std::vector<std::uint64_t> out;
    for (const auto& s : split_on(spec, ',')) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw InvalidArgument("seeds must be a comma-separated list of nonnegative integers");
        out.push_back(std::stoull(s));
    }
    return out;
}

}  // namespace plasma::harness
