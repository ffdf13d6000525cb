#include <CLI11.hpp>

#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "plasma/corpus/stats.hpp"
#include "plasma/corpus/synth.hpp"
#include "plasma/energy/energy.hpp"
#include "plasma/harness/pipeline.hpp"
#include "plasma/metrics/scores.hpp"
#include "plasma/nn/checkpoint.hpp"
#include "plasma/prompt/profile.hpp"
#include "plasma/prompt/template.hpp"
#include "plasma/util/error.hpp"
#include "support/composed_check.hpp"
#include "support/op_cases.hpp"

using namespace plasma;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int prec = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << x;
    return os.str();
}

// ---------------------------------------------------------------------------
// 1. split statistics fixture

struct Cell {
    std::size_t spans, summaries;
};

// Published split table; columns INFORMATION, CAUSE, SUGGESTION, QUESTION, EXPERIENCE.
const std::map<std::string, std::pair<std::size_t, std::array<Cell, 5>>> kTable = {
    {"train", {2533, {{{4823, 1961}, {646, 342}, {4128, 1547}, {325, 249}, {1439, 845}}}}},
    {"val", {317, {{{643, 246}, {108, 49}, {549, 208}, {42, 32}, {170, 108}}}}},
    {"test", {317, {{{631, 242}, {81, 45}, {499, 188}, {44, 31}, {181, 100}}}}},
};
constexpr std::size_t kTotalThreads = 3167;
const std::array<Cell, 5> kTotal = {{{6097, 2449}, {835, 436}, {5176, 1943}, {411, 312}, {1790, 1053}}};
const std::array<Perspective, 5> kTableOrder = {Perspective::Information, Perspective::Cause, Perspective::Suggestion,
                                                Perspective::Question, Perspective::Experience};

Outcome split_statistics(const fs::path& data_dir) {
    auto ds = corpus::load_corpus((data_dir / "split_fixture.jsonl").string());
    auto splits = corpus::load_splits((data_dir / "split_fixture_splits.json").string());
    auto st = corpus::compute_stats(ds.threads, &splits);
    std::size_t mismatches = 0;
    auto cmp = [&](const corpus::SplitStats& got, std::size_t threads, const std::array<Cell, 5>& want) {
        if (got.threads != threads) ++mismatches;
        for (std::size_t k = 0; k < 5; ++k) {
            const auto& c = got.counts[index_of(kTableOrder[k])];
            if (c.spans != want[k].spans || c.summaries != want[k].summaries) ++mismatches;
        }
    };
    for (const auto& [name, row] : kTable) cmp(st.splits.at(name), row.first, row.second);
    cmp(st.total, kTotalThreads, kTotal);
    return {mismatches == 0 && ds.diagnostics.empty(),
            std::to_string(mismatches) + " mismatched cells, " + std::to_string(ds.diagnostics.size()) +
                " diagnostics, " + std::to_string(ds.threads.size()) + " threads"};
}

// ---------------------------------------------------------------------------
// 2. metric oracles

std::map<metrics::Tokens, int> ngram_bag(const metrics::Tokens& t, int n) {
    std::map<metrics::Tokens, int> bag;
    for (std::size_t i = 0; i + n <= t.size(); ++i) ++bag[metrics::Tokens(t.begin() + i, t.begin() + i + n)];
    return bag;
}

double oracle_rouge_f1(const metrics::Tokens& c, const metrics::Tokens& r, int n) {
    auto bc = ngram_bag(c, n), br = ngram_bag(r, n);
    int tc = 0, tr = 0, hit = 0;
    for (auto& kv : bc) tc += kv.second;
    for (auto& [g, k] : br) {
        tr += k;
        if (auto it = bc.find(g); it != bc.end()) hit += std::min(k, it->second);
    }
    if (tc == 0 || tr == 0 || hit == 0) return 0.0;
    const double p = double(hit) / tc, rc = double(hit) / tr;
    return 2 * p * rc / (p + rc);
}

std::size_t oracle_lcs(const metrics::Tokens& a, const metrics::Tokens& b) {
    const auto& s = a.size() <= b.size() ? a : b;
    const auto& l = a.size() <= b.size() ? b : a;
    std::size_t best = 0;
    for (unsigned mask = 0; mask < (1u << s.size()); ++mask) {
        std::size_t bits = std::popcount(mask);
        if (bits <= best) continue;
        std::size_t j = 0;
        for (std::size_t i = 0; i < l.size(); ++i) {
            while (j < s.size() && !(mask & (1u << j))) ++j;
            if (j < s.size() && l[i] == s[j]) ++j;
        }
        while (j < s.size() && !(mask & (1u << j))) ++j;
        if (j == s.size()) best = bits;
    }
    return best;
}

Outcome metric_oracles() {
    static const char* words[] = {"the", "cat", "sat", "on", "a", "mat", "dog"};
    Rng rng(31);
    std::size_t bad = 0;
    for (int i = 0; i < 200; ++i) {
        metrics::Tokens c(rng.between(0, 11)), r(rng.between(0, 11));
        for (auto& w : c) w = words[rng.below(7)];
        for (auto& w : r) w = words[rng.below(7)];
        for (int n : {1, 2})
            if (std::abs(metrics::rouge_n(c, r, n).f1 - oracle_rouge_f1(c, r, n)) > 1e-12) ++bad;
        if (metrics::lcs_length(c, r) != oracle_lcs(c, r)) ++bad;
    }
    auto cand = metrics::tokenize_eval("it is suggested to rest and drink water");
    std::vector<metrics::Tokens> same{cand};
    const double b_same = metrics::bleu(cand, same);
    std::vector<metrics::Tokens> ref{metrics::tokenize_eval("the cat sat")};
    const double b_short = metrics::bleu(metrics::tokenize_eval("the cat"), ref);
    const bool ok = bad == 0 && std::abs(b_same - 1.0) < 1e-12 && std::abs(b_short - 0.6065) < 1e-4;
    return {ok, std::to_string(bad) + " oracle mismatches over 200 pairs, BLEU(c,c)=" + fmt(b_same, 6) +
                    ", BLEU(\"the cat\",\"the cat sat\")=" + fmt(b_short, 6)};
}

// ---------------------------------------------------------------------------
// 3. energy softmax

Outcome energy_softmax_checks() {
    double uniform_err = 0.0;
    for (double p : energy::energy_softmax({1, 1, 1, 1, 1})) uniform_err = std::max(uniform_err, std::abs(p - 0.2));
    const double p1 = energy::energy_softmax({2, 1, 1, 1, 1})[0];
    Rng rng(8);
    double sum_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        energy::Vec5 e;
        for (auto& x : e) x = rng.uniform(energy::kEnergyEps, 10.0);
        double s = 0.0;
        for (double p : energy::energy_softmax(e)) s += p;
        sum_err = std::max(sum_err, std::abs(s - 1.0));
    }
    const bool ok = uniform_err <= 1e-12 && std::abs(p1 - 0.2919) < 1e-4 && sum_err <= 1e-12;
    std::ostringstream os;
    os << "uniform err " << uniform_err << ", p1(2,1,1,1,1)=" << fmt(p1, 6) << ", max |sum-1| " << sum_err;
    return {ok, os.str()};
}

// ---------------------------------------------------------------------------
// 4. gradient checks

Outcome gradient_checks(const fs::path& work) {
    const auto t0 = Clock::now();
    Rng rng(5);
    double worst = 0.0;
    std::string worst_name;
    for (const auto& c : testing::op_cases()) {
        auto r = testing::check_op(c, rng);
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            worst_name = std::string(c.name) + " " + r.worst;
        }
    }
    harness::RunConfig cfg;
    cfg.synth_threads = 30;
    cfg.model.enc_layers = 1;
    cfg.model.dec_layers = 1;
    cfg.model.heads = 2;
    cfg.model.d_model = 16;
    cfg.model.d_ff = 32;
    cfg.model.max_len = 256;
    cfg.max_src_len = 200;
    cfg.decode_max_len = 8;
    cfg.classifier.epochs = 5;
    cfg.pretrain.epochs = 1;
    cfg.output_dir = (work / "gradcheck").string();
    auto exp = harness::pretrain_experiment(cfg);
    for (bool free_run : {true, false}) {
        auto r = testing::composed_loss_check(exp, free_run);
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            worst_name = std::string("composed loss (") + (free_run ? "free-run" : "teacher-forced") + ") " + r.worst;
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << testing::op_cases().size() << " op cases + composed loss, max rel error " << std::scientific
       << std::setprecision(2) << worst << " (" << worst_name << "), " << std::fixed << std::setprecision(1) << secs
       << " s";
    return {worst < 1e-4 && secs < 60.0, os.str()};
}

// ---------------------------------------------------------------------------
// 5-7. prefix training on the synthetic corpus

struct AblationOutcome {
    Outcome frozen, ordering, anchors;
};

double mean_of(const harness::AblationResult& r, const std::string& variant, const std::string& key) {
    for (const auto& row : r.rows)
        if (row.variant == variant) return row.values.at(key).mean;
    throw Error("missing ablation row " + variant);
}

AblationOutcome ablation_checks(const fs::path& config_path, const fs::path& work) {
    const auto t0 = Clock::now();
    auto cfg = harness::RunConfig::load(config_path.string());
    cfg.output_dir = (work / "synthetic").string();
    fs::remove_all(cfg.output_dir);
    auto exp = harness::pretrain_experiment(cfg, &std::cerr);
    const std::uint64_t recorded = nn::checkpoint_hash((fs::path(cfg.output_dir) / "base.ckpt").string());

    const std::string no_b = "no_lp/prompt:P+D+T";
    auto matrix = harness::parse_matrix("full,no_lp,no_Ea,no_Ep," + no_b);
    auto result = harness::run_ablation(exp, matrix, {1, 2, 3}, "test", &std::cerr);
    const double secs = seconds_since(t0);

    AblationOutcome out;
    std::size_t changed = 0;
    for (const auto& run : result.runs)
        if (run.training.base_hash_before != recorded || run.training.base_hash_after != recorded) ++changed;
    const bool file_same = nn::checkpoint_hash((fs::path(cfg.output_dir) / "base.ckpt").string()) == recorded &&
                           exp.base.params.hash() == recorded;
    out.frozen = {changed == 0 && file_same, std::to_string(result.runs.size()) + " prefix runs, " +
                                                 std::to_string(changed) + " with a changed base hash"};

    struct Cmp {
        const char* a;
        const char* b;
        const char* key;
    };
    const Cmp cmps[] = {{"full", "no_lp", "classifier_accuracy"},
                        {"full", "no_lp", "anchor_energy"},
                        {"full", "no_Ea", "anchor_hit_rate"},
                        {"full", "no_Ep", "classifier_accuracy"}};
    bool ok = secs < 20 * 60;
    std::ostringstream os;
    for (const auto& c : cmps) {
        const double x = mean_of(result, c.a, c.key), y = mean_of(result, c.b, c.key);
        ok = ok && x > y;
        os << c.key << " " << c.a << " " << fmt(x) << (x > y ? " > " : " <= ") << c.b << " " << fmt(y) << "; ";
    }
    os << "3 seeds, " << fmt(secs, 0) << " s";
    out.ordering = {ok, os.str()};

    const double full_rate = mean_of(result, "full", "suggestion_anchor_hit_rate");
    const double nob_rate = mean_of(result, no_b, "suggestion_anchor_hit_rate");
    out.anchors = {full_rate >= 0.8 && nob_rate <= 0.4, "SUGGESTION summaries starting with the anchor: full " +
                                                            fmt(full_rate) + ", " + no_b + " " + fmt(nob_rate)};
    return out;
}

// ---------------------------------------------------------------------------
// 8. prompt parse-back

Outcome prompt_parse_back() {
    auto data = corpus::synthesize_corpus(corpus::SynthConfig::defaults(20), 77);
    const char* variants[] = {"full",     "prompt:P",          "prompt:D",       "prompt:P+D",
                              "prompt:B", "prompt:P+D+B",      "prompt:P+D+T",   "prompt:T",
                              "placement:after", "placement:after/prompt:P+D+T"};
    harness::RunConfig base;
    std::size_t checked = 0, bad = 0;
    for (const char* id : variants) {
        auto cfg = harness::Variant::parse(id).apply(base);
        for (std::size_t i = 0; i < data.threads.size(); ++i) {
            const auto& t = data.threads[i];
            const Perspective p = perspective_at(i % kNumPerspectives);
            auto sections = prompt::parse_prompt(prompt::build_prompt({&t, p, cfg.placement, cfg.parts}));
            const auto& prof = prompt::profile_for(p);
            std::vector<prompt::PromptSection> constraints, inputs;
            if (cfg.parts.task) constraints.push_back({prompt::SectionKind::Task, prompt::task_line(p)});
            if (cfg.parts.definition) constraints.push_back({prompt::SectionKind::Definition, std::string(prof.definition)});
            if (cfg.parts.begin_with) constraints.push_back({prompt::SectionKind::BeginWith, std::string(prof.anchor_text)});
            if (cfg.parts.tone) constraints.push_back({prompt::SectionKind::Tone, std::string(prof.tone_label)});
            std::string content;
            for (std::size_t k = 0; k < t.answers.size(); ++k)
                content += (k ? std::string(prompt::kAnswerSeparator) : "") + t.answers[k];
            inputs = {{prompt::SectionKind::Question, t.question}, {prompt::SectionKind::Content, content}};
            std::vector<prompt::PromptSection> want;
            auto& first = cfg.placement == prompt::Placement::Before ? constraints : inputs;
            auto& second = cfg.placement == prompt::Placement::Before ? inputs : constraints;
            want.insert(want.end(), first.begin(), first.end());
            want.insert(want.end(), second.begin(), second.end());
            ++checked;
            if (sections != want) ++bad;
        }
    }
    return {bad == 0, std::to_string(checked) + " prompts, " + std::to_string(bad) + " mismatched"};
}

// ---------------------------------------------------------------------------
// 9. classifier

Outcome classifier_checks(const fs::path& config_path) {
    auto cfg = harness::RunConfig::load(config_path.string());
    auto data = harness::load_data(cfg);
    auto lexicon = energy::ToneLexicon::bundled();
    auto vocab = harness::build_run_vocab(data.train, lexicon, cfg.vocab_max);
    auto clf = energy::train_classifier(harness::span_examples(data.train), vocab, cfg.classifier, cfg.classifier_seed);
    const double acc = energy::classifier_accuracy(clf, harness::span_examples(data.test), vocab);
    energy::PerspectiveClassifier zero(vocab.size(), cfg.classifier.dim, 0.0, 1);
    double dev = 0.0;
    for (const auto& t : data.test)
        for (const auto& s : t.spans)
            for (double p : zero.predict(vocab.encode_text(s.text))) dev = std::max(dev, std::abs(p - 0.2));
    std::ostringstream os;
    os << "held-out span accuracy " << fmt(acc) << ", zero-init max |p-0.2| " << dev;
    return {acc >= 0.95 && dev < 1e-12, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::string data_dir = PLASMA_TEST_DATA_DIR, work_dir = "acceptance_work";
    std::set<int> only;
    app.add_option("--data-dir", data_dir, "Directory with the fixtures and acceptance config");
    app.add_option("--work-dir", work_dir, "Scratch directory for run artifacts");
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const fs::path data(data_dir), work(work_dir);
    fs::create_directories(work);
    const fs::path config = data / "acceptance_config.json";
    auto wanted = [&](int k) { return only.empty() || only.count(k) > 0; };

    std::map<int, Outcome> results;
    auto guarded = [&](int k, auto&& fn) {
        if (!wanted(k)) return;
        try {
            results[k] = fn();
        } catch (const std::exception& e) {
            results[k] = {false, std::string("exception: ") + e.what()};
        }
    };
    guarded(1, [&] { return split_statistics(data); });
    guarded(2, [] { return metric_oracles(); });
    guarded(3, [] { return energy_softmax_checks(); });
    guarded(4, [&] { return gradient_checks(work); });
    if (wanted(5) || wanted(6) || wanted(7)) {
        try {
            auto a = ablation_checks(config, work);
            results[5] = a.frozen;
            results[6] = a.ordering;
            results[7] = a.anchors;
        } catch (const std::exception& e) {
            for (int k : {5, 6, 7}) results[k] = {false, std::string("exception: ") + e.what()};
        }
        for (int k : {5, 6, 7})
            if (!wanted(k)) results.erase(k);
    }
    guarded(8, [] { return prompt_parse_back(); });
    guarded(9, [&] { return classifier_checks(config); });

    static const char* names[] = {"",
                                  "split statistics fixture",
                                  "metric oracles",
                                  "energy softmax",
                                  "finite-difference gradients",
                                  "frozen base hash",
                                  "ablation ordering",
                                  "anchor adoption",
                                  "prompt parse-back",
                                  "perspective classifier"};
    bool all = true;
    for (const auto& [k, r] : results) {
        all = all && r.pass;
        std::cout << "criterion " << k << " [" << names[k] << "]: " << (r.pass ? "PASS" : "FAIL") << " - " << r.detail
                  << std::endl;
    }
    return all ? 0 : 1;
}
