#include <doctest.h>

#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "plasma/harness/config.hpp"
#include "plasma/harness/pipeline.hpp"
#include "plasma/nn/decode.hpp"
#include "plasma/prompt/profile.hpp"
#include "plasma/util/error.hpp"
#include "support/composed_check.hpp"

using namespace plasma;
using namespace plasma::harness;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config(const std::string& dir) {
    RunConfig c;
    c.synth_threads = 40;
    c.synth_seed = 3;
    c.model.enc_layers = 1;
    c.model.dec_layers = 1;
    c.model.heads = 2;
    c.model.d_model = 16;
    c.model.d_ff = 32;
    c.model.max_len = 256;
    c.max_src_len = 200;
    c.prefix_len = 2;
    c.classifier.epochs = 10;
    c.pretrain.epochs = 2;
    c.pretrain.lr = 3e-3;
    c.train.epochs = 1;
    c.decode_max_len = 8;
    c.output_dir = (fs::temp_directory_path() / dir).string();
    return c;
}

Experiment& tiny_experiment() {
    static Experiment exp = [] {
        auto c = tiny_config("plasma_test_harness");
        fs::remove_all(c.output_dir);
        return pretrain_experiment(c);
    }();
    return exp;
}

struct ScorerBundle {
    energy::TableEmbedder embedder;
    energy::EnergyScorer scorer;
    explicit ScorerBundle(const Experiment& e, energy::EnergyWeights w = {})
        : embedder(e.embedder()), scorer(e.vocab, e.classifier, e.lexicon, embedder, w) {}
};

}  // namespace

TEST_CASE("config json") {
    RunConfig c;
    auto back = RunConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());

    auto custom = RunConfig::from_json(R"({"energy":{"alpha":[0.5,0.3,0.2],"lp_mode":"teacher_forced"},
        "prompt":{"parts":"P+D+T","placement":"after"},"train":{"lr":0.01,"clip_norm":0.1},"seeds":[4,5]})");
    CHECK(custom.weights.alpha1 == 0.5);
    CHECK(custom.lp_mode == LpMode::TeacherForced);
    CHECK(custom.parts == prompt::PromptParts::parse("P+D+T"));
    CHECK(custom.placement == prompt::Placement::After);
    CHECK(custom.train.clip_norm == 0.1);
    CHECK(custom.seeds == std::vector<std::uint64_t>{4, 5});

    CHECK_THROWS_AS(RunConfig::from_json(R"({"trian":{}})"), InvalidArgument);
    CHECK_THROWS_AS(RunConfig::from_json(R"({"train":{"lr":"fast"}})"), InvalidArgument);
    CHECK_THROWS_AS(RunConfig::from_json(R"({"energy":{"alpha":[0,0,0]}})"), InvalidArgument);
    CHECK_THROWS_AS(RunConfig::from_json(R"({"data":{"corpus":"/nonexistent.jsonl"}})"), InvalidArgument);
    CHECK_THROWS_AS(RunConfig::from_json("{"), InvalidArgument);
}

TEST_CASE("variants") {
    RunConfig base;
    auto no_ea = Variant::parse("no_Ea").apply(base);
    CHECK(no_ea.weights.alpha2 == 0.0);
    CHECK(no_ea.weights.alpha1 == doctest::Approx(0.5));
    CHECK(no_ea.weights.alpha3 == doctest::Approx(0.5));
    CHECK_FALSE(Variant::parse("no_lp").apply(base).use_lp);
    auto combo = Variant::parse("no_lp/prompt:P+D+T").apply(base);
    CHECK_FALSE(combo.use_lp);
    CHECK_FALSE(combo.parts.begin_with);
    CHECK(Variant::parse("placement:after").apply(base).placement == prompt::Placement::After);
    for (const auto& id : Variant::known()) CHECK_NOTHROW(Variant::parse(id));
    CHECK_THROWS_AS(Variant::parse("no_such"), InvalidArgument);
    CHECK_THROWS_AS(Variant::parse("full/"), InvalidArgument);
    CHECK_THROWS_AS(Variant::parse("prompt:Z"), InvalidArgument);

    CHECK(parse_matrix("full, no_lp").size() == 2);
    CHECK(parse_seeds("1,2,3") == std::vector<std::uint64_t>{1, 2, 3});
    CHECK_THROWS_AS(parse_seeds("1,x"), InvalidArgument);
}

TEST_CASE("data loading") {
    auto c = tiny_config("plasma_test_data");
    auto d = load_data(c);
    CHECK(d.threads.size() == 40);
    CHECK(d.train.size() == 32);
    CHECK(d.val.size() == 4);
    CHECK(d.test.size() == 4);
    CHECK(&d.split("val") == &d.val);
    CHECK_THROWS_AS(d.split("dev"), InvalidArgument);

    auto vocab = build_run_vocab(d.train, energy::ToneLexicon::bundled(), 4000);
    PromptSettings ps;
    auto ex = make_examples(d.train, vocab, ps);
    std::size_t summaries = 0;
    for (const auto& t : d.train) summaries += t.summaries.size();
    CHECK(ex.size() == summaries);
    for (Perspective p : kAllPerspectives)
        for (const auto& w : prompt::anchor_tokens(p)) CHECK(vocab.contains(w));
    ps.max_src_len = 10;
    CHECK(encode_prompt(vocab, d.train[0], Perspective::Cause, ps).size() == 10);
}

TEST_CASE("pretraining") {
    auto c = tiny_config("plasma_test_pretrain");
    c.pretrain.epochs = 5;
    c.pretrain.lr = 1e-2;
    c.pretrain.batch_size = 2;
    auto d = load_data(c);
    auto vocab = build_run_vocab(d.train, energy::ToneLexicon::bundled(), 4000);
    PromptSettings ps;
    ps.parts = prompt::PromptParts::none();
    auto ex = make_examples(d.train, vocab, ps);
    ex.resize(8);
    std::ostringstream log;
    auto a = pretrain_base(c, ex, vocab.size(), 1, &log);
    REQUIRE(a.epoch_ce.size() == 5);
    CHECK(a.epoch_ce.back() < 0.5 * a.initial_ce);
    CHECK(log.str().find("\"epoch\"") != std::string::npos);
    auto b = pretrain_base(c, ex, vocab.size(), 1);
    CHECK(a.hash == b.hash);
    CHECK_THROWS_AS(pretrain_base(c, {}, vocab.size(), 1), InvalidArgument);
}

TEST_CASE("evaluation with a gold generator") {
    auto& exp = tiny_experiment();
    auto embedder = exp.embedder();
    EvalContext ctx{&exp.vocab, &exp.classifier, &embedder, exp.prompt_settings()};
    auto report = evaluate(exp.data.train, [](const Example& e) { return e.tgt; }, ctx);
    const EvalRow* all = report.row("OVERALL");
    REQUIRE(all);
    CHECK(all->metrics.rouge1.f1 == doctest::Approx(1.0));
    CHECK(all->metrics.rougeL.f1 == doctest::Approx(1.0));
    CHECK(all->anchor_hit_rate == doctest::Approx(1.0));

    double weighted = 0.0, n = 0.0;
    for (const auto& r : report.rows)
        if (r.scope != "OVERALL") {
            weighted += r.count * r.metrics.bleu;
            n += r.count;
        }
    CHECK(all->count == n);
    CHECK(std::abs(all->metrics.bleu - weighted / n) < 1e-9);
    CHECK(report.generations.size() == all->count);
    CHECK(report_json(report, "gold").find("OVERALL") != std::string::npos);
    CHECK(render_report(report).find("OVERALL") != std::string::npos);
    CHECK_THROWS_AS(evaluate({}, [](const Example& e) { return e.tgt; }, ctx), InvalidArgument);
}

TEST_CASE("prefix training keeps the base frozen") {
    auto& exp = tiny_experiment();
    ScorerBundle sb(exp);
    auto ex = make_examples(exp.data.train, exp.vocab, exp.prompt_settings());
    ex.resize(6);
    std::ostringstream log;
    auto r = train_prefix(exp.config, exp.base, exp.base_hash, sb.scorer, ex, 1, &log);
    CHECK(r.base_hash_before == exp.base_hash);
    CHECK(r.base_hash_after == exp.base_hash);
    CHECK(exp.base.params.hash() == exp.base_hash);
    REQUIRE(!r.steps.empty());
    auto line = nlohmann::json::parse(log.str().substr(0, log.str().find('\n')));
    for (const char* k : {"step", "ce", "lp", "E", "p"}) CHECK(line.contains(k));
    CHECK(line["E"].size() == 5);
    CHECK_THROWS_AS(train_prefix(exp.config, exp.base, exp.base_hash + 1, sb.scorer, ex, 1), InvalidArgument);
    CHECK_THROWS_AS(train_prefix(exp.config, exp.base, exp.base_hash, sb.scorer, {}, 1), InvalidArgument);
}

TEST_CASE("composed loss gradient with respect to prefix parameters") {
    auto& exp = tiny_experiment();
    for (bool free_run : {true, false}) {
        CAPTURE(free_run);
        auto res = testing::composed_loss_check(exp, free_run);
        CAPTURE(res.worst);
        CHECK(res.max_rel_error < 1e-4);
    }
}

TEST_CASE("ablation matrix shape") {
    auto& exp = tiny_experiment();
    auto res = run_ablation(exp, parse_matrix("full,no_lp"), {1, 2, 3}, "val");
    CHECK(res.runs.size() == 6);
    REQUIRE(res.rows.size() == 2);
    CHECK(res.rows[0].variant == "full");
    CHECK(res.rows[1].runs == 3);
    const auto& agg = res.rows[0].values.at("classifier_accuracy");
    CHECK(agg.min <= agg.mean + 1e-12);
    CHECK(agg.mean <= agg.max + 1e-12);
    CHECK(nlohmann::json::parse(ablation_json(res)).is_object());
    CHECK(render_ablation(res).find("no_lp") != std::string::npos);
    CHECK_THROWS_AS(run_ablation(exp, parse_matrix("full"), {}, "val"), InvalidArgument);
}

TEST_CASE("reranking") {
    auto& exp = tiny_experiment();
    ScorerBundle sb(exp);
    const std::string id = exp.data.test.at(0).id;
    std::istringstream in(R"({"thread_id":")" + id + R"(","text":"consult a doctor soon"})" + "\n" +
                          R"({"thread_id":")" + id + R"(","text":"it is suggested consult a doctor soon"})" + "\n" +
                          R"({"thread_id":")" + id + R"(","text":"consult a doctor soon"})" + "\n" +
                          R"({"thread_id":"missing","text":"x"})" + "\nnot json\n");
    std::set<std::string> known{id};
    auto r = rerank(in, Perspective::Suggestion, sb.scorer, known);
    REQUIRE(r.ranked.size() == 3);
    CHECK(r.ranked[0].index == 1);
    CHECK(r.ranked[1].index == 0);
    CHECK(r.ranked[2].index == 2);
    CHECK(r.ranked[0].score > r.ranked[1].score);
    CHECK(r.diagnostics.size() == 2);
    CHECK(rerank_jsonl(r).find("it is suggested") != std::string::npos);

    std::istringstream empty("");
    auto e = rerank(empty, Perspective::Suggestion, sb.scorer, known);
    CHECK(e.ranked.empty());
    CHECK(rerank_jsonl(e).empty());
}

TEST_CASE("experiment artifacts reload") {
    auto& exp = tiny_experiment();
    for (const char* f : {"vocab.txt", "classifier.ckpt", "base.ckpt", "base.hash", "pretrain_log.jsonl"})
        CHECK(fs::exists(fs::path(exp.config.output_dir) / f));
    auto again = load_experiment(exp.config);
    CHECK(again.base_hash == exp.base_hash);
    CHECK(again.vocab == exp.vocab);
    CHECK(again.classifier.params() == exp.classifier.params());
}
