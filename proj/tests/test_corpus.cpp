#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>

#include "plasma/corpus/agreement.hpp"
#include "plasma/corpus/puma_import.hpp"
#include "plasma/corpus/stats.hpp"
#include "plasma/corpus/synth.hpp"
#include "plasma/corpus/thread.hpp"
#include "plasma/metrics/tokenize.hpp"
#include "plasma/prompt/profile.hpp"
#include "plasma/util/error.hpp"

using namespace plasma;
using namespace plasma::corpus;

namespace {

Thread small_thread(std::string id = "t1") {
    Thread t;
    t.id = std::move(id);
    t.question = "what helps a headache?";
    t.category = "Other - Health";
    t.answers = {"drink water and rest", "I tried ice once"};
    t.spans.push_back({0, 0, 11, Perspective::Suggestion, "drink water"});
    t.summaries[Perspective::Suggestion] = "It is suggested to drink water.";
    return t;
}

Thread letters_thread() {
    Thread t;
    t.id = "letters";
    t.question = "q?";
    std::string a;
    for (char c = 'a'; c < 'a' + 20; ++c) {
        if (!a.empty()) a += ' ';
        a += c;
    }
    t.answers = {a};
    return t;
}

}  // namespace

TEST_CASE("labels") {
    CHECK(label_name(Perspective::Suggestion) == "SUGGESTION");
    CHECK(parse_label("QUESTION") == Perspective::Question);
    CHECK_FALSE(parse_label("question").has_value());
    CHECK(index_of(Perspective::Experience) == 3);
}

TEST_CASE("validation") {
    Thread ok = small_thread();
    CHECK(validate_thread(ok).empty());

    Thread bad = ok;
    bad.spans[0].end = 99;
    auto d = validate_thread(bad);
    REQUIRE(d.size() >= 1);
    CHECK(d[0].field == "spans[0].end");
    CHECK(d[0].severity == Severity::Error);

    Thread unsupported = ok;
    unsupported.summaries[Perspective::Cause] = "Some of the causes are stress.";
    auto w = validate_thread(unsupported);
    REQUIRE(w.size() == 1);
    CHECK(w[0].severity == Severity::Warning);

    Thread no_answers = ok;
    no_answers.answers.clear();
    no_answers.spans.clear();
    CHECK_FALSE(validate_thread(no_answers).empty());

    Thread mismatch = ok;
    mismatch.spans[0].text = "drink wine";
    CHECK(validate_thread(mismatch).at(0).field == "spans[0].text");
}

TEST_CASE("jsonl round trip and diagnostics") {
    Thread t = small_thread();
    std::ostringstream os;
    write_corpus(os, {t});
    std::istringstream is(os.str() + "{not json}\n" +
                          R"({"id":"x","question":"q","category":"c","answers":["ab"],"spans":[{"answer_idx":0,"start":0,"end":5,"label":"CAUSE"}],"summaries":{}})" +
                          "\n");
    Dataset ds = parse_corpus(is);
    REQUIRE(ds.threads.size() == 1);
    CHECK(ds.threads[0] == t);
    CHECK(ds.error_count() == 2);
    bool named = false;
    for (const auto& diag : ds.diagnostics) named |= diag.field == "spans[0].end" && diag.line == 3;
    CHECK(named);
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), IoError);
}

TEST_CASE("code point offsets") {
    Thread t = small_thread();
    t.answers[0] = "héllo wörld";
    t.spans = {{0, 6, 11, Perspective::Information, ""}};
    t.summaries.clear();
    fill_span_text(t);
    CHECK(t.spans[0].text == "wörld");
    CHECK(validate_thread(t).empty());
}

TEST_CASE("stats") {
    CorpusStats empty = compute_stats({});
    CHECK(empty.total.threads == 0);
    for (const auto& c : empty.total.counts) CHECK(c == PerspectiveCounts{});

    std::vector<Thread> ts{small_thread("a"), small_thread("b")};
    ts[1].spans.push_back({1, 0, 5, Perspective::Experience, "I tri"});
    SplitAssignment sa{{"a", "train"}, {"b", "test"}};
    auto st = compute_stats(ts, &sa);
    CHECK(st.splits.at("train").threads == 1);
    CHECK(st.splits.at("test").counts[index_of(Perspective::Experience)].spans == 1);
    CHECK(st.total.counts[index_of(Perspective::Suggestion)] == PerspectiveCounts{2, 2});
    CHECK(st.by_category.at("Other - Health")[index_of(Perspective::Suggestion)].spans == 2);

    SplitAssignment partial{{"a", "train"}};
    CHECK_THROWS_AS(compute_stats(ts, &partial), InvalidArgument);
    SplitAssignment unknown{{"a", "train"}, {"b", "dev"}};
    CHECK_THROWS_AS(compute_stats(ts, &unknown), InvalidArgument);
    CHECK(render_stats_table(st).find("SUGGESTION") != std::string::npos);
}

TEST_CASE("splits") {
    std::vector<Thread> ts;
    for (int i = 0; i < 10; ++i) ts.push_back(small_thread("t" + std::to_string(i)));
    auto sa = split_dataset(ts, {0.8, 0.1, 0.1}, 7);
    std::map<std::string, int> n;
    for (auto& [id, s] : sa) ++n[s];
    CHECK(n["train"] == 8);
    CHECK(n["val"] == 1);
    CHECK(n["test"] == 1);
    CHECK(split_dataset(ts, {0.8, 0.1, 0.1}, 7) == sa);

    auto all = split_dataset(ts, {1, 0, 0}, 3);
    for (auto& [id, s] : all) CHECK(s == "train");

    CHECK(split_sizes(3167, {0.8, 0.1, 0.1}) == std::array<std::size_t, 3>{2533, 317, 317});
    CHECK(split_sizes(5, {0.5, 0.5, 0.0}) == std::array<std::size_t, 3>{3, 2, 0});
    CHECK_THROWS_AS(split_sizes(10, {0.5, 0.2, 0.2}), InvalidArgument);

    auto path = (std::filesystem::temp_directory_path() / "plasma_test_splits.json").string();
    save_splits(path, ts, sa);
    CHECK(load_splits(path) == sa);
    CHECK(select_split(ts, sa, "val").size() == 1);
    std::remove(path.c_str());
}

TEST_CASE("span agreement") {
    Thread a = letters_thread(), b = letters_thread();
    // tokens 0..9 = chars [0,19); tokens 5..14 = chars [10,29)
    a.spans = {{0, 0, 19, Perspective::Cause, ""}};
    b.spans = {{0, 10, 29, Perspective::Cause, ""}};
    fill_span_text(a);
    fill_span_text(b);
    auto s = span_agreement(a, b);
    CHECK(s.jaccard == doctest::Approx(5.0 / 15.0));
    CHECK(s.f1 == 0.0);  // IoU 1/3 below the match threshold

    b.spans = {{0, 2, 19, Perspective::Cause, ""}};
    fill_span_text(b);
    CHECK(span_agreement(a, b).f1 == doctest::Approx(1.0));
    b.spans[0].label = Perspective::Information;
    CHECK(span_agreement(a, b).f1 == 0.0);

    Thread other = letters_thread();
    other.id = "zzz";
    CHECK_THROWS_AS(span_agreement(a, other), InvalidArgument);
}

TEST_CASE("summary agreement") {
    std::map<Perspective, std::string> a{{Perspective::Cause, "the cat sat"}};
    std::map<Perspective, std::string> b{{Perspective::Cause, "the cat ran"}};
    std::vector<metrics::Tokens> texts{metrics::tokenize_eval("the cat sat ran")};
    metrics::OneHotEmbedder emb(texts);
    auto s = summary_agreement(a, b, emb);
    CHECK(s.rouge1 == doctest::Approx(2.0 / 3.0));
    CHECK(s.rouge2 == doctest::Approx(0.5));

    b[Perspective::Question] = "why";
    CHECK(summary_agreement(a, b, emb).rouge1 == doctest::Approx(1.0 / 3.0));
    CHECK(summary_agreement({}, {}, emb).rouge1 == 1.0);

    std::vector<Thread> ca{small_thread("a"), small_thread("b")}, cb{small_thread("a")};
    auto rep = corpus_agreement(ca, cb);
    CHECK(rep.threads_compared == 1);
    CHECK(rep.threads_unmatched == 1);
    CHECK(rep.summary_rouge1 == doctest::Approx(1.0));
}

TEST_CASE("synthetic corpus") {
    auto cfg = SynthConfig::defaults(40);
    Dataset d1 = synthesize_corpus(cfg, 11), d2 = synthesize_corpus(cfg, 11);
    CHECK(d1.threads == d2.threads);
    CHECK(d1.threads.size() == 40);
    CHECK(synthesize_corpus(cfg, 12).threads != d1.threads);

    std::ostringstream os;
    write_corpus(os, d1.threads);
    std::istringstream is(os.str());
    Dataset back = parse_corpus(is);
    CHECK(back.diagnostics.empty());
    CHECK(back.threads == d1.threads);

    std::set<std::string> cats;
    for (const auto& t : d1.threads) {
        cats.insert(t.category);
        for (const auto& s : t.spans) {
            std::set<std::string> allowed(cfg.vocab[index_of(s.label)].begin(), cfg.vocab[index_of(s.label)].end());
            for (const auto& tok : metrics::tokenize_eval(s.text)) CHECK(allowed.count(tok) == 1);
        }
        for (const auto& [p, text] : t.summaries)
            CHECK(prompt::starts_with_anchor(metrics::tokenize_eval(text), p));
        if (t.summaries.count(Perspective::Suggestion))
            CHECK(t.summaries.at(Perspective::Suggestion).rfind("it is suggested", 0) == 0);
    }
    CHECK(cats.size() > 1);

    auto overlap = cfg;
    overlap.vocab[index_of(Perspective::Cause)].push_back("pain");
    overlap.vocab[index_of(Perspective::Experience)].push_back("pain");
    CHECK_THROWS_AS(synthesize_corpus(overlap, 1), InvalidArgument);

    auto bad_range = cfg;
    bad_range.min_labels = 5;
    bad_range.max_labels = 2;
    CHECK_THROWS_AS(synthesize_corpus(bad_range, 1), InvalidArgument);
}

TEST_CASE("puma import") {
    std::istringstream in(R"([{"uri":"u1","question":"why?","answers":["rest is best. sleep more"],
        "labelled_answer_spans":{"SUGGESTION":[{"txt":"sleep more"},{"txt":"absent text"}],"BOGUS":[{"txt":"x"}]},
        "labelled_summaries":{"SUGGESTION_SUMMARY":"It is suggested to sleep more."}}])");
    Dataset d = import_puma(in);
    REQUIRE(d.threads.size() == 1);
    const Thread& t = d.threads[0];
    CHECK(t.id == "u1");
    CHECK(t.category == "unknown");
    REQUIRE(t.spans.size() == 1);
    CHECK(t.spans[0].start == 14);
    CHECK(t.spans[0].end == 24);
    CHECK(t.summaries.at(Perspective::Suggestion) == "It is suggested to sleep more.");
    CHECK(d.diagnostics.size() == 2);
}
