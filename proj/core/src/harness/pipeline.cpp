#include "plasma/harness/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "plasma/corpus/synth.hpp"
#include "plasma/nn/checkpoint.hpp"
#include "plasma/nn/decode.hpp"
#include "plasma/nn/optim.hpp"
#include "plasma/prompt/profile.hpp"
#include "plasma/util/error.hpp"
#include "plasma/util/rng.hpp"

namespace plasma::harness {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::vector<int> encode_prompt(const nn::Vocab& vocab, const corpus::Thread& thread, Perspective p,
                               const PromptSettings& settings) {
    prompt::PromptSpec spec{&thread, p, settings.placement, settings.parts};
    auto ids = vocab.encode_text(prompt::build_prompt(spec));
    if (ids.size() > settings.max_src_len) ids.resize(settings.max_src_len);
    if (ids.empty()) ids.push_back(nn::kUnk);
    return ids;
}

std::vector<Example> make_examples(const std::vector<corpus::Thread>& threads, const nn::Vocab& vocab,
                                   const PromptSettings& settings) {
    std::vector<Example> out;
    for (const auto& t : threads)
        for (const auto& [p, summary] : t.summaries) {
            Example ex;
            ex.thread = &t;
            ex.perspective = p;
            ex.tgt = vocab.encode_text(summary);
            if (ex.tgt.empty()) continue;
            ex.src = encode_prompt(vocab, t, p, settings);
            out.push_back(std::move(ex));
        }
    return out;
}

std::vector<energy::LabeledText> span_examples(const std::vector<corpus::Thread>& threads) {
    std::vector<energy::LabeledText> out;
    for (const auto& t : threads)
        for (const auto& s : t.spans) out.push_back({s.text, s.label});
    return out;
}

nn::Vocab build_run_vocab(const std::vector<corpus::Thread>& train, const energy::ToneLexicon& lexicon,
                          std::size_t max_size) {
    std::vector<std::string> texts;
    for (const auto& t : train) {
        texts.push_back(t.question);
        for (const auto& a : t.answers) texts.push_back(a);
        for (const auto& [p, s] : t.summaries) texts.push_back(s);
    }
    std::vector<std::string> required;
    for (Perspective p : kAllPerspectives) {
        const auto& prof = prompt::profile_for(p);
        required.push_back(prompt::task_line(p));
        required.emplace_back(prof.definition);
        required.emplace_back(prof.anchor_text);
        required.emplace_back(prof.tone_label);
    }
    for (auto k : {prompt::SectionKind::Task, prompt::SectionKind::Definition, prompt::SectionKind::BeginWith,
                   prompt::SectionKind::Tone, prompt::SectionKind::Question, prompt::SectionKind::Content})
        required.emplace_back(prompt::section_header(k));
    required.emplace_back(prompt::kAnswerSeparator);
    for (const auto& w : lexicon.all_words()) required.push_back(w);
    return nn::Vocab::build(texts, max_size, required);
}

const std::vector<corpus::Thread>& DataBundle::split(std::string_view name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

DataBundle load_data(const RunConfig& config) {
    DataBundle b;
    corpus::Dataset ds = config.corpus.empty()
                             ? corpus::synthesize_corpus(corpus::SynthConfig::defaults(config.synth_threads),
                                                         config.synth_seed)
                             : corpus::load_corpus(config.corpus);
    b.rejected = ds.error_count();
    b.threads = std::move(ds.threads);
    b.splits = config.splits.empty() ? corpus::split_dataset(b.threads, config.split_ratios, config.split_seed)
                                     : corpus::load_splits(config.splits);
    b.train = corpus::select_split(b.threads, b.splits, "train");
    b.val = corpus::select_split(b.threads, b.splits, "val");
    b.test = corpus::select_split(b.threads, b.splits, "test");
    return b;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
void for_batches(std::vector<std::size_t>& order, std::size_t batch, Fn&& fn) {
    for (std::size_t b = 0; b < order.size(); b += batch)
        fn(std::span<const std::size_t>(order.data() + b, std::min(order.size(), b + batch) - b));
}

ordered_json vec_json(const energy::Vec5& v) { return ordered_json(std::vector<double>(v.begin(), v.end())); }

}  // namespace

PretrainResult pretrain_base(const RunConfig& config, const std::vector<Example>& train, std::size_t vocab_size,
                             std::uint64_t seed, std::ostream* log) {
    if (train.empty()) throw InvalidArgument("pretraining needs a nonempty training split");
    nn::ModelConfig mc = config.model;
    mc.vocab_size = vocab_size;
    PretrainResult r;
    r.model = nn::ModelParams::init(mc, seed);
    const nn::TrainMask mask = nn::TrainMask::all_of(r.model.params);
    nn::Adam adam(r.model.params, mask, {.lr = config.pretrain.lr, .clip_norm = config.pretrain.clip_norm});
    Rng rng(seed ^ 0x5bd1e995ULL);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    bool first = true;
    for (std::size_t epoch = 0; epoch < config.pretrain.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double sum = 0.0;
        std::size_t batches = 0;
        for_batches(order, config.pretrain.batch_size, [&](std::span<const std::size_t> batch) {
            nn::Tape tape;
            nn::Bound mb(tape, r.model.params, mask);
            nn::Transformer tf(r.model.config, mb, nullptr, 0);
            nn::Var total;
            for (std::size_t i : batch) {
                const Example& ex = train[i];
                nn::Var ce = nn::cross_entropy(tf.forward(ex.src, nn::shift_right(ex.tgt)), nn::with_eos(ex.tgt), nn::kPad);
                total = total.valid() ? nn::add(total, ce) : ce;
            }
            nn::Var loss = nn::scale(total, 1.0 / static_cast<double>(batch.size()));
            const double value = loss.value().item();
            if (!std::isfinite(value))
                throw NumericError("pretraining diverged at epoch " + std::to_string(epoch + 1));
            if (first) {
                r.initial_ce = value;
                first = false;
            }
            tape.backward(loss);
            adam.step(r.model.params, mb.gradients(r.model.params, mask));
            sum += value;
            ++batches;
        });
        r.epoch_ce.push_back(sum / static_cast<double>(batches));
        if (log) *log << ordered_json{{"epoch", epoch + 1}, {"ce", r.epoch_ce.back()}}.dump() << '\n';
    }
    r.hash = r.model.params.hash();
    return r;
}

std::string StepLog::to_json() const {
    return ordered_json{{"step", step}, {"ce", ce}, {"lp", lp}, {"E", vec_json(e)}, {"p", vec_json(p)}}.dump();
}

TrainResult train_prefix(const RunConfig& config, const nn::ModelParams& base, std::uint64_t expected_base_hash,
                         const energy::EnergyScorer& scorer, const std::vector<Example>& train, std::uint64_t seed,
                         std::ostream* log) {
    TrainResult r;
    r.base_hash_before = base.params.hash();
    if (r.base_hash_before != expected_base_hash)
        throw InvalidArgument("base checkpoint hash does not match the recorded frozen base");
    if (train.empty()) throw InvalidArgument("prefix training needs a nonempty training split");

    const std::size_t V = base.config.vocab_size;
    r.prefix = nn::PrefixParams::init(base.config, config.prefix_len, config.prefix_init, seed);
    const nn::TrainMask mask = nn::TrainMask::all_of(r.prefix.params);
    nn::Adam adam(r.prefix.params, mask, {.lr = config.train.lr, .clip_norm = config.train.clip_norm});
    const nn::TrainMask frozen;
    Rng rng(seed ^ 0x27d4eb2fULL);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const bool free_run = config.lp_mode == LpMode::FreeRun;

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for_batches(order, config.train.batch_size, [&](std::span<const std::size_t> batch) {
            nn::Tape tape;
            nn::Bound mb(tape, base.params, frozen);
            nn::Bound pb(tape, r.prefix.params, mask);
            nn::Bound cb(tape, scorer.classifier().params(), frozen);
            nn::Transformer tf(base.config, mb, &pb, r.prefix.prefix_len);

            // Greedy free-run uses the current prefix values without gradient.
            std::optional<nn::Tape> itape;
            std::optional<nn::Bound> imb, ipb;
            std::optional<nn::Transformer> itf;
            if (config.use_lp && free_run) {
                itape.emplace();
                imb.emplace(*itape, base.params, frozen);
                ipb.emplace(*itape, r.prefix.params, frozen);
                itf.emplace(base.config, *imb, &*ipb, r.prefix.prefix_len);
            }

            nn::Var total;
            StepLog entry;
            entry.step = ++step;
            for (std::size_t i : batch) {
                const Example& ex = train[i];
                const std::size_t T = ex.tgt.size();
                nn::Var memory = tf.encode(ex.src);
                nn::Var logits = tf.decode(memory, nn::shift_right(ex.tgt));
                nn::Var ce = nn::cross_entropy(logits, nn::with_eos(ex.tgt), nn::kPad);
                entry.ce += ce.value().item();
                nn::Var loss = ce;
                energy::EnergyScorer::Graph g;
                if (config.use_lp) {
                    nn::Var probs;
                    if (free_run) {
                        nn::Var imem = itape->constant(memory.value());
                        nn::DecodeOptions opt;
                        opt.max_len = T;
                        opt.stop_at_eos = false;
                        auto greedy = nn::decode_with(*itf, imem, V, opt).ids;
                        greedy.pop_back();
                        probs = nn::softmax_rows(tf.decode(memory, nn::shift_right(greedy)));
                    } else {
                        probs = nn::softmax_rows(nn::slice_rows(logits, 0, T));
                    }
                    g = scorer.soft(cb, probs);
                    nn::Var lp = energy::EnergyScorer::loss(g, ex.perspective);
                    entry.lp += lp.value().item();
                    loss = nn::add(ce, lp);
                } else {
                    // Diagnostics only: energies of the teacher-forced rows, detached.
                    nn::Tape dtape;
                    nn::Bound dcb(dtape, scorer.classifier().params(), frozen);
                    nn::Tensor rows = nn::Tensor::matrix(T, V);
                    nn::Tensor full = nn::softmax_rows(tape.constant(logits.value())).value();
                    std::copy_n(full.data(), T * V, rows.data());
                    auto dg = scorer.soft(dcb, dtape.constant(std::move(rows)));
                    auto b = energy::EnergyScorer::breakdown(dg);
                    for (std::size_t k = 0; k < kNumPerspectives; ++k) {
                        entry.e[k] += b.e_combined[k];
                        entry.p[k] += b.p[k];
                    }
                }
                if (config.use_lp) {
                    auto b = energy::EnergyScorer::breakdown(g);
                    for (std::size_t k = 0; k < kNumPerspectives; ++k) {
                        entry.e[k] += b.e_combined[k];
                        entry.p[k] += b.p[k];
                    }
                }
                total = total.valid() ? nn::add(total, loss) : loss;
            }
            const double n = static_cast<double>(batch.size());
            nn::Var loss = nn::scale(total, 1.0 / n);
            tape.backward(loss);
            adam.step(r.prefix.params, pb.gradients(r.prefix.params, mask));
            entry.ce /= n;
            entry.lp /= n;
            for (std::size_t k = 0; k < kNumPerspectives; ++k) {
                entry.e[k] /= n;
                entry.p[k] /= n;
            }
            if (log) *log << entry.to_json() << '\n';
            r.steps.push_back(entry);
        });
    }
    r.base_hash_after = base.params.hash();
    return r;
}

// ---------------------------------------------------------------------------

const EvalRow* EvalReport::row(std::string_view scope) const {
    for (const auto& r : rows)
        if (r.scope == scope) return &r;
    return nullptr;
}

EvalReport evaluate(const std::vector<corpus::Thread>& split, const Generator& generate, const EvalContext& ctx) {
    if (split.empty()) throw InvalidArgument("evaluation split is empty");
    if (!ctx.vocab || !ctx.classifier || !ctx.embedder) throw InvalidArgument("evaluation context is incomplete");
    EvalReport report;
    struct Acc {
        std::vector<metrics::MetricReport> reports;
        double acc = 0.0, hit = 0.0, ea = 0.0;
    };
    PerspectiveArray<Acc> per{};
    for (const auto& t : split) {
        if (t.summaries.empty()) {
            ++report.skipped_threads;
            continue;
        }
        ++report.evaluated_threads;
        for (const auto& [p, gold] : t.summaries) {
            Example ex;
            ex.thread = &t;
            ex.perspective = p;
            ex.src = encode_prompt(*ctx.vocab, t, p, ctx.prompt);
            ex.tgt = ctx.vocab->encode_text(gold);
            const auto ids = generate(ex);
            const auto cand = ctx.vocab->decode(ids);
            const auto ref = metrics::tokenize_eval(gold);
            Acc& a = per[index_of(p)];
            a.reports.push_back(metrics::score_pair(cand, ref, *ctx.embedder));
            std::vector<int> clean;
            for (int id : ids)
                if (!ctx.vocab->is_special(id)) clean.push_back(id);
            if (!clean.empty() && ctx.classifier->classify(clean) == p) a.acc += 1.0;
            if (prompt::starts_with_anchor(cand, p)) a.hit += 1.0;
            a.ea += energy::anchor_energy(cand)[index_of(p)];
            report.generations.push_back({t.id, p, metrics::detokenize(cand)});
        }
    }
    std::vector<metrics::MetricReport> row_reports;
    std::vector<double> weights;
    EvalRow overall;
    overall.scope = "OVERALL";
    for (Perspective p : kAllPerspectives) {
        const Acc& a = per[index_of(p)];
        if (a.reports.empty()) continue;
        EvalRow row;
        row.scope = std::string(label_name(p));
        row.count = a.reports.size();
        const double n = static_cast<double>(row.count);
        std::vector<double> ones(row.count, 1.0);
        row.metrics = metrics::weighted_mean(a.reports, ones);
        row.classifier_accuracy = a.acc / n;
        row.anchor_hit_rate = a.hit / n;
        row.anchor_energy = a.ea / n;
        row_reports.push_back(row.metrics);
        weights.push_back(n);
        overall.count += row.count;
        overall.classifier_accuracy += a.acc;
        overall.anchor_hit_rate += a.hit;
        overall.anchor_energy += a.ea;
        report.rows.push_back(row);
    }
    if (overall.count > 0) {
        const double n = static_cast<double>(overall.count);
        overall.metrics = metrics::weighted_mean(row_reports, weights);
        overall.classifier_accuracy /= n;
        overall.anchor_hit_rate /= n;
        overall.anchor_energy /= n;
    }
    report.rows.push_back(overall);
    return report;
}

Generator model_generator(const RunConfig& config, const nn::ModelParams& base, const nn::PrefixParams* prefix) {
    nn::DecodeOptions opt;
    opt.max_len = config.decode_max_len;
    opt.mode = config.decode_sample ? nn::DecodeMode::Sample : nn::DecodeMode::Greedy;
    opt.temperature = config.decode_temperature;
    opt.seed = config.decode_seed;
    return [&base, prefix, opt](const Example& ex) { return nn::decode(base, prefix, ex.src, opt).ids; };
}

namespace {

ordered_json rouge_json(const metrics::RougeScore& r) {
    return {{"recall", r.recall}, {"precision", r.precision}, {"f1", r.f1}};
}

ordered_json row_json(const EvalRow& r) {
    return {{"scope", r.scope},
            {"count", r.count},
            {"rouge1", rouge_json(r.metrics.rouge1)},
            {"rouge2", rouge_json(r.metrics.rouge2)},
            {"rougeL", rouge_json(r.metrics.rougeL)},
            {"bleu", r.metrics.bleu},
            {"meteor", r.metrics.meteor},
            {"embed_sim", r.metrics.embed_sim},
            {"classifier_accuracy", r.classifier_accuracy},
            {"anchor_hit_rate", r.anchor_hit_rate},
            {"anchor_energy", r.anchor_energy}};
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << v;
    return ss.str();
}

std::string render_grid(const std::vector<std::vector<std::string>>& cells) {
    std::vector<std::size_t> width;
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (width.size() <= c) width.push_back(0);
            width[c] = std::max(width[c], row[c].size());
        }
    std::ostringstream out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t c = 0; c < cells[r].size(); ++c) {
            if (c) out << "  ";
            if (c == 0) out << std::left << std::setw(static_cast<int>(width[c])) << cells[r][c];
            else out << std::right << std::setw(static_cast<int>(width[c])) << cells[r][c];
        }
        out << '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w;
            out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
        }
    }
    return out.str();
}

}  // namespace

std::string report_json(const EvalReport& report, const std::string& label) {
    ordered_json j;
    j["label"] = label;
    j["evaluated_threads"] = report.evaluated_threads;
    j["skipped_threads"] = report.skipped_threads;
    j["metadata"] = {{"rouge_stemming", false},
                     {"rouge_stopword_removal", false},
                     {"bleu", "sentence-level, add-one smoothing for n>=2, averaged over examples"},
                     {"meteor", "exact + porter stem, alpha 0.9 beta 3 gamma 0.5"},
                     {"embed_sim", "greedy-matching F1 over perspective classifier token embeddings"},
                     {"overall", "example-weighted mean of perspective rows"}};
    j["rows"] = ordered_json::array();
    for (const auto& r : report.rows) j["rows"].push_back(row_json(r));
    return j.dump(2);
}

std::string render_report(const EvalReport& report) {
    std::vector<std::vector<std::string>> cells{{"Perspective", "N", "R1-R", "R1-F1", "R2-R", "R2-F1", "RL-R", "RL-F1",
                                                 "BS*", "MET", "BLEU", "Cls-Acc", "Anchor"}};
    for (const auto& r : report.rows) {
        const auto& m = r.metrics;
        cells.push_back({r.scope, std::to_string(r.count), fixed(m.rouge1.recall), fixed(m.rouge1.f1),
                         fixed(m.rouge2.recall), fixed(m.rouge2.f1), fixed(m.rougeL.recall), fixed(m.rougeL.f1),
                         fixed(m.embed_sim), fixed(m.meteor), fixed(m.bleu), fixed(r.classifier_accuracy),
                         fixed(r.anchor_hit_rate)});
    }
    std::string out = render_grid(cells);
    out += "evaluated threads: " + std::to_string(report.evaluated_threads) +
           ", skipped (no gold summary): " + std::to_string(report.skipped_threads) + "\n";
    return out;
}

// ---------------------------------------------------------------------------

energy::TableEmbedder Experiment::embedder() const {
    return energy::TableEmbedder(vocab, classifier.params().get("cls.embed"));
}

namespace {

fs::path out_path(const RunConfig& c, const std::string& name) { return fs::path(c.output_dir) / name; }

energy::ToneLexicon run_lexicon(const RunConfig& c) {
    return c.lexicon.empty() ? energy::ToneLexicon::bundled() : energy::ToneLexicon::load(c.lexicon);
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string hex64(std::uint64_t v) {
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << v;
    return ss.str();
}

std::string classifier_metadata(const RunConfig& c, double acc) {
    return ordered_json{{"dim", c.classifier.dim}, {"seed", c.classifier_seed}, {"val_accuracy", acc}}.dump();
}

}  // namespace

Experiment pretrain_experiment(const RunConfig& config, std::ostream* progress) {
    config.validate();
    fs::create_directories(config.output_dir);
    Experiment exp;
    exp.config = config;
    exp.data = load_data(config);
    if (exp.data.train.empty()) throw InvalidArgument("training split is empty");
    exp.lexicon = run_lexicon(config);
    exp.vocab = build_run_vocab(exp.data.train, exp.lexicon, config.vocab_max);
    exp.config.model.vocab_size = exp.vocab.size();
    exp.vocab.save_file(out_path(config, "vocab.txt").string());
    if (progress) *progress << "vocabulary: " << exp.vocab.size() << " tokens\n";

    auto train_spans = span_examples(exp.data.train);
    exp.classifier = energy::train_classifier(train_spans, exp.vocab, config.classifier, config.classifier_seed);
    auto val_spans = span_examples(exp.data.val.empty() ? exp.data.train : exp.data.val);
    exp.classifier_val_accuracy = energy::classifier_accuracy(exp.classifier, val_spans, exp.vocab);
    nn::save_checkpoint(out_path(config, "classifier.ckpt").string(),
                        {"classifier", classifier_metadata(config, exp.classifier_val_accuracy), exp.classifier.params()});
    if (progress) *progress << "classifier held-out accuracy: " << fixed(exp.classifier_val_accuracy) << "\n";

    PromptSettings ps = exp.prompt_settings();
    if (config.pretrain_input == "content") ps.parts = prompt::PromptParts::none();
    auto examples = make_examples(exp.data.train, exp.vocab, ps);
    if (config.pretrain_target == "body") {
        std::vector<Example> kept;
        for (auto& ex : examples) {
            const auto anchor = exp.vocab.encode(prompt::anchor_tokens(ex.perspective));
            if (ex.tgt.size() > anchor.size() && std::equal(anchor.begin(), anchor.end(), ex.tgt.begin()))
                ex.tgt.erase(ex.tgt.begin(), ex.tgt.begin() + static_cast<std::ptrdiff_t>(anchor.size()));
            kept.push_back(std::move(ex));
        }
        examples = std::move(kept);
    }
    std::ofstream log(out_path(config, "pretrain_log.jsonl"), std::ios::binary);
    auto pr = pretrain_base(exp.config, examples, exp.vocab.size(), config.pretrain.seed, &log);
    exp.base = std::move(pr.model);
    exp.base_hash = pr.hash;
    nn::save_checkpoint(out_path(config, "base.ckpt").string(), {"base", exp.base.config.to_json(), exp.base.params});
    write_text(out_path(config, "base.hash"), hex64(exp.base_hash) + "\n");
    write_text(out_path(config, "resolved_config.json"), exp.config.to_json() + "\n");
    if (progress) {
        *progress << "base pretraining CE: initial " << fixed(pr.initial_ce) << ", final "
                  << fixed(pr.epoch_ce.empty() ? pr.initial_ce : pr.epoch_ce.back()) << "\n";
        *progress << "base hash: " << hex64(exp.base_hash) << "\n";
    }
    return exp;
}

Experiment load_experiment(const RunConfig& config) {
    config.validate();
    Experiment exp;
    exp.config = config;
    exp.data = load_data(config);
    exp.lexicon = run_lexicon(config);
    exp.vocab = nn::Vocab::load_file(out_path(config, "vocab.txt").string());
    auto cls = nn::load_checkpoint(out_path(config, "classifier.ckpt").string());
    if (cls.kind != "classifier") throw IoError("classifier.ckpt has kind " + cls.kind);
    exp.classifier = energy::PerspectiveClassifier(std::move(cls.params));
    try {
        exp.classifier_val_accuracy = ordered_json::parse(cls.metadata).value("val_accuracy", 0.0);
    } catch (const nlohmann::json::exception&) {
    }
    auto base = nn::load_checkpoint(out_path(config, "base.ckpt").string());
    if (base.kind != "base") throw IoError("base.ckpt has kind " + base.kind);
    exp.base.config = nn::ModelConfig::from_json(base.metadata);
    exp.base.params = std::move(base.params);
    exp.config.model = exp.base.config;
    exp.base_hash = exp.base.params.hash();
    std::string recorded = read_text(out_path(config, "base.hash"));
    while (!recorded.empty() && (recorded.back() == '\n' || recorded.back() == '\r')) recorded.pop_back();
    if (recorded != hex64(exp.base_hash)) throw InvalidArgument("base checkpoint does not match base.hash");
    if (exp.base.config.vocab_size != exp.vocab.size()) throw IoError("base checkpoint and vocabulary disagree in size");
    return exp;
}

Experiment open_experiment(const RunConfig& config, std::ostream* progress) {
    for (const char* f : {"vocab.txt", "classifier.ckpt", "base.ckpt", "base.hash"})
        if (!fs::exists(out_path(config, f))) return pretrain_experiment(config, progress);
    return load_experiment(config);
}

namespace {

std::string file_tag(const std::string& variant, std::uint64_t seed) {
    std::string tag;
    for (char c : variant) tag.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ? c : '-');
    return tag + "-s" + std::to_string(seed);
}

}  // namespace

VariantRun run_variant(const Experiment& exp, const Variant& variant, std::uint64_t seed, std::string_view split,
                       bool save) {
    RunConfig cfg = variant.apply(exp.config);
    cfg.model = exp.base.config;
    const PromptSettings ps{cfg.parts, cfg.placement, cfg.max_src_len};
    auto train = make_examples(exp.data.train, exp.vocab, ps);
    auto embedder = exp.embedder();
    energy::EnergyScorer scorer(exp.vocab, exp.classifier, exp.lexicon, embedder, cfg.weights, cfg.anchor_score);

    VariantRun run;
    run.variant = variant.id;
    run.seed = seed;
    std::unique_ptr<std::ofstream> log;
    const std::string tag = file_tag(variant.id, seed);
    if (save) {
        fs::create_directories(cfg.output_dir);
        log = std::make_unique<std::ofstream>(out_path(cfg, "energy_log-" + tag + ".jsonl"), std::ios::binary);
    }
    run.training = train_prefix(cfg, exp.base, exp.base_hash, scorer, train, seed, log.get());
    if (run.training.base_hash_after != exp.base_hash) throw Error("frozen base changed during prefix training");
    if (save) {
        ordered_json meta{{"variant", variant.id}, {"seed", seed}, {"base_hash", hex64(exp.base_hash)}};
        nn::save_checkpoint(out_path(cfg, "prefix-" + tag + ".ckpt").string(),
                            {"prefix", meta.dump(), run.training.prefix.params});
    }
    EvalContext ctx{&exp.vocab, &exp.classifier, &embedder, ps};
    run.report = evaluate(exp.data.split(split), model_generator(cfg, exp.base, &run.training.prefix), ctx);
    return run;
}

namespace {

std::map<std::string, double> run_values(const EvalReport& r) {
    std::map<std::string, double> v;
    const EvalRow* o = r.row("OVERALL");
    if (!o) return v;
    v["rouge1_f1"] = o->metrics.rouge1.f1;
    v["rouge1_recall"] = o->metrics.rouge1.recall;
    v["rouge2_f1"] = o->metrics.rouge2.f1;
    v["rougeL_f1"] = o->metrics.rougeL.f1;
    v["rougeL_recall"] = o->metrics.rougeL.recall;
    v["embed_sim"] = o->metrics.embed_sim;
    v["meteor"] = o->metrics.meteor;
    v["bleu"] = o->metrics.bleu;
    v["classifier_accuracy"] = o->classifier_accuracy;
    v["anchor_hit_rate"] = o->anchor_hit_rate;
    v["anchor_energy"] = o->anchor_energy;
    if (const EvalRow* s = r.row("SUGGESTION")) v["suggestion_anchor_hit_rate"] = s->anchor_hit_rate;
    return v;
}

}  // namespace

AblationResult run_ablation(const Experiment& exp, const std::vector<Variant>& matrix,
                            const std::vector<std::uint64_t>& seeds, std::string_view split, std::ostream* progress) {
    if (seeds.empty()) throw InvalidArgument("ablation needs at least one seed");
    if (matrix.empty()) throw InvalidArgument("ablation matrix is empty");
    AblationResult result;
    for (const auto& v : matrix) {
        AblationRow row;
        row.variant = v.id;
        std::map<std::string, std::vector<double>> samples;
        for (auto seed : seeds) {
            auto run = run_variant(exp, v, seed, split);
            for (auto& [k, x] : run_values(run.report)) samples[k].push_back(x);
            if (progress) {
                const EvalRow* o = run.report.row("OVERALL");
                *progress << v.id << " seed " << seed << ": R1-F1 " << fixed(o ? o->metrics.rouge1.f1 : 0.0)
                          << ", classifier accuracy " << fixed(o ? o->classifier_accuracy : 0.0) << ", anchor hit "
                          << fixed(o ? o->anchor_hit_rate : 0.0) << "\n";
            }
            run.training.steps.clear();
            result.runs.push_back(std::move(run));
            ++row.runs;
        }
        for (auto& [k, xs] : samples) {
            Aggregate a;
            a.min = *std::min_element(xs.begin(), xs.end());
            a.max = *std::max_element(xs.begin(), xs.end());
            for (double x : xs) a.mean += x;
            a.mean /= static_cast<double>(xs.size());
            row.values[k] = a;
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string ablation_json(const AblationResult& result) {
    ordered_json j;
    j["rows"] = ordered_json::array();
    for (const auto& r : result.rows) {
        ordered_json row{{"variant", r.variant}, {"runs", r.runs}};
        for (const auto& [k, a] : r.values) row[k] = {{"mean", a.mean}, {"min", a.min}, {"max", a.max}};
        j["rows"].push_back(row);
    }
    j["runs"] = ordered_json::array();
    for (const auto& run : result.runs) {
        ordered_json rows = ordered_json::array();
        for (const auto& r : run.report.rows) rows.push_back(row_json(r));
        j["runs"].push_back({{"variant", run.variant}, {"seed", run.seed}, {"rows", rows}});
    }
    return j.dump(2);
}

std::string render_ablation(const AblationResult& result) {
    const std::vector<std::pair<const char*, const char*>> cols = {
        {"rouge1_f1", "R1-F1"},       {"rouge2_f1", "R2-F1"},   {"rougeL_f1", "RL-F1"},
        {"embed_sim", "BS*"},         {"meteor", "MET"},        {"bleu", "BLEU"},
        {"classifier_accuracy", "Cls-Acc"}, {"anchor_energy", "E_a"}, {"anchor_hit_rate", "Anchor"}};
    std::vector<std::vector<std::string>> cells{{"Variant", "Runs"}};
    for (auto& c : cols) cells[0].push_back(c.second);
    for (const auto& r : result.rows) {
        std::vector<std::string> line{r.variant, std::to_string(r.runs)};
        for (auto& c : cols) {
            auto it = r.values.find(c.first);
            if (it == r.values.end()) {
                line.push_back("-");
                continue;
            }
            const auto& a = it->second;
            line.push_back(fixed(a.mean) + " ±" + fixed((a.max - a.min) / 2.0));
        }
        cells.push_back(std::move(line));
    }
    return render_grid(cells);
}

// ---------------------------------------------------------------------------

RerankResult rerank(std::istream& in, Perspective target, const energy::EnergyScorer& scorer,
                    const std::set<std::string>& known_ids) {
    RerankResult result;
    std::string line;
    std::size_t lineno = 0;
    auto diag = [&](const std::string& field, const std::string& msg) {
        result.diagnostics.push_back({lineno, field, msg, corpus::Severity::Error});
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception&) {
            diag("", "not valid JSON");
            continue;
        }
        if (!j.is_object() || !j.contains("thread_id") || !j["thread_id"].is_string()) {
            diag("thread_id", "missing or not a string");
            continue;
        }
        if (!j.contains("text") || !j["text"].is_string()) {
            diag("text", "missing or not a string");
            continue;
        }
        Candidate c;
        c.thread_id = j["thread_id"].get<std::string>();
        c.text = j["text"].get<std::string>();
        if (j.contains("perspective")) {
            auto p = j["perspective"].is_string() ? parse_label(j["perspective"].get<std::string>()) : std::nullopt;
            if (!p) {
                diag("perspective", "unknown perspective label");
                continue;
            }
            c.perspective = *p;
        }
        if (!known_ids.empty() && !known_ids.count(c.thread_id)) {
            diag("thread_id", "unknown thread id '" + c.thread_id + "'");
            continue;
        }
        RankedCandidate rc;
        rc.index = result.ranked.size();
        rc.energy = scorer.score_text(c.text);
        rc.score = rc.energy.e_combined[index_of(target)];
        rc.candidate = std::move(c);
        result.ranked.push_back(std::move(rc));
    }
    std::stable_sort(result.ranked.begin(), result.ranked.end(),
                     [](const RankedCandidate& a, const RankedCandidate& b) { return a.score > b.score; });
    return result;
}

std::string rerank_jsonl(const RerankResult& result) {
    std::string out;
    std::size_t rank = 0;
    for (const auto& r : result.ranked) {
        ordered_json j{{"rank", ++rank}, {"thread_id", r.candidate.thread_id}};
        if (r.candidate.perspective) j["perspective"] = label_name(*r.candidate.perspective);
        j["text"] = r.candidate.text;
        j["score"] = r.score;
        j["E_p"] = vec_json(r.energy.e_p);
        j["E_a"] = vec_json(r.energy.e_a);
        j["E_t"] = vec_json(r.energy.e_t);
        j["E"] = vec_json(r.energy.e_combined);
        j["p"] = vec_json(r.energy.p);
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace plasma::harness
