#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "plasma/metrics/porter.hpp"
#include "plasma/metrics/scores.hpp"
#include "plasma/metrics/tokenize.hpp"
#include "plasma/util/error.hpp"
#include "plasma/util/rng.hpp"

using namespace plasma;
using namespace plasma::metrics;

namespace {

Tokens toks(const char* s) { return tokenize_eval(s); }

// Independent oracles: explicit n-gram multisets and subsequence enumeration.
std::map<Tokens, int> ngram_bag(const Tokens& t, int n) {
    std::map<Tokens, int> bag;
    for (std::size_t i = 0; i + n <= t.size(); ++i) ++bag[Tokens(t.begin() + i, t.begin() + i + n)];
    return bag;
}

RougeScore oracle_rouge_n(const Tokens& c, const Tokens& r, int n) {
    auto bc = ngram_bag(c, n), br = ngram_bag(r, n);
    int tc = 0, tr = 0, hit = 0;
    for (auto& [g, k] : bc) tc += k;
    for (auto& [g, k] : br) {
        tr += k;
        auto it = bc.find(g);
        if (it != bc.end()) hit += std::min(k, it->second);
    }
    RougeScore s;
    if (tc == 0 || tr == 0) return s;
    s.recall = double(hit) / tr;
    s.precision = double(hit) / tc;
    s.f1 = s.recall + s.precision > 0 ? 2 * s.recall * s.precision / (s.recall + s.precision) : 0.0;
    return s;
}

bool is_subsequence(const Tokens& sub, const Tokens& t) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < t.size() && j < sub.size(); ++i)
        if (t[i] == sub[j]) ++j;
    return j == sub.size();
}

std::size_t oracle_lcs(const Tokens& a, const Tokens& b) {
    const Tokens& s = a.size() <= b.size() ? a : b;
    const Tokens& l = a.size() <= b.size() ? b : a;
    std::size_t best = 0;
    for (unsigned mask = 0; mask < (1u << s.size()); ++mask) {
        std::size_t bits = std::popcount(mask);
        if (bits <= best) continue;
        Tokens sub;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (mask & (1u << i)) sub.push_back(s[i]);
        if (is_subsequence(sub, l)) best = bits;
    }
    return best;
}

Tokens random_tokens(Rng& rng, std::size_t max_len) {
    static const char* words[] = {"a", "b", "c", "d", "e", "f"};
    Tokens t(rng.between(0, static_cast<std::int64_t>(max_len)));
    for (auto& w : t) w = words[rng.below(6)];
    return t;
}

}  // namespace

TEST_CASE("tokenizer rules") {
    CHECK(toks("It is suggested...") == Tokens{"it", "is", "suggested"});
    CHECK(toks("Why?") == Tokens{"why", "?"});
    CHECK(toks("in user's experience") == Tokens{"in", "user's", "experience"});
    CHECK(toks("well-known fact.") == Tokens{"well-known", "fact", "."});
    CHECK(toks("  ").empty());
    CHECK(toks("a,b") == Tokens{"a", ",", "b"});
    CHECK(toks("café Über") == Tokens{"café", "Über"});

    auto spans = tokenize_with_offsets("héllo world");
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].start == 0);
    CHECK(spans[0].end == 5);
    CHECK(spans[1].start == 6);
    CHECK(detokenize({"a", "b"}) == "a b");
}

TEST_CASE("porter stemmer reference words") {
    CHECK(porter_stem("caresses") == "caress");
    CHECK(porter_stem("ponies") == "poni");
    CHECK(porter_stem("relational") == "relat");
    CHECK(porter_stem("running") == "run");
    CHECK(porter_stem("generalizations") == "gener");
    CHECK(porter_stem("user's") == "user's");
}

TEST_CASE("rouge identities and hand cases") {
    Tokens x = toks("the quick brown fox jumps");
    CHECK(rouge_n(x, x, 1).f1 == doctest::Approx(1.0));
    CHECK(rouge_n(x, x, 2).f1 == doctest::Approx(1.0));
    CHECK(rouge_l(x, x).f1 == doctest::Approx(1.0));
    CHECK(lcs_length(toks("a b c d"), toks("a c b d")) == 3);
    CHECK(rouge_l(toks("a b c d"), toks("a c b d")).f1 == doctest::Approx(0.75));
    CHECK(rouge_n({}, x, 1).f1 == 0.0);
    CHECK(rouge_n(toks("a"), toks("a"), 2).f1 == 0.0);

    auto s = rouge_n(toks("the cat sat"), toks("the cat ran"), 1);
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(make_rouge(0, 0).f1 == 0.0);
}

TEST_CASE("rouge and lcs against brute-force oracles on random pairs") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        Tokens c = random_tokens(rng, 10), r = random_tokens(rng, 10);
        for (int n : {1, 2}) {
            auto got = rouge_n(c, r, n), want = oracle_rouge_n(c, r, n);
            REQUIRE(got.recall == doctest::Approx(want.recall).epsilon(1e-12));
            REQUIRE(got.precision == doctest::Approx(want.precision).epsilon(1e-12));
            REQUIRE(got.f1 == doctest::Approx(want.f1).epsilon(1e-12));
        }
        REQUIRE(lcs_length(c, r) == oracle_lcs(c, r));
    }
}

TEST_CASE("bleu") {
    Tokens cand = toks("the cat sat on the mat");
    std::vector<Tokens> refs{cand};
    CHECK(bleu(cand, refs) == doctest::Approx(1.0));

    std::vector<Tokens> longer{toks("the cat sat")};
    CHECK(bleu(toks("the cat"), longer) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(std::abs(bleu(toks("the cat"), longer) - 0.6065) < 1e-4);

    std::vector<Tokens> none{toks("x y z")};
    CHECK(bleu(toks("a b c"), none) == 0.0);
    CHECK(bleu({}, none) == 0.0);
}

TEST_CASE("meteor") {
    CHECK(meteor_lite(toks("hello"), toks("hello")) == doctest::Approx(0.5));
    Tokens ten = toks("a b c d e f g h i j");
    CHECK(meteor_lite(ten, ten) == doctest::Approx(0.9995));
    CHECK(meteor_lite(toks("running"), toks("runs")) == doctest::Approx(0.5));
    CHECK(meteor_lite(toks("x"), toks("y")) == 0.0);
}

TEST_CASE("cosine and embedding similarity") {
    std::vector<double> u{1, 1}, v{1, 0}, z{0, 0};
    CHECK(cosine(u, v) == doctest::Approx(std::sqrt(0.5)));
    CHECK(std::abs(cosine(u, v) - 0.7071) < 1e-4);
    CHECK(cosine(u, z) == 0.0);
    std::vector<double> w{1, 2, 3};
    CHECK_THROWS_AS(cosine(u, w), InvalidArgument);

    std::vector<Tokens> texts{toks("a b c")};
    OneHotEmbedder emb(texts);
    CHECK(embed_sim_score(toks("a b"), toks("a b"), emb) == doctest::Approx(1.0));
    // precision 1 (a,b matched), recall 2/3
    CHECK(embed_sim_score(toks("a b"), toks("a b c"), emb) == doctest::Approx(0.8));
    CHECK(embed_sim_score(toks("q"), toks("a"), emb) == 0.0);
}

TEST_CASE("weighted mean of reports") {
    MetricReport a, b;
    a.bleu = 1.0;
    a.rouge1.f1 = 0.5;
    b.bleu = 0.0;
    b.rouge1.f1 = 1.0;
    std::vector<MetricReport> rs{a, b};
    std::vector<double> w{3, 1};
    auto m = weighted_mean(rs, w);
    CHECK(std::abs(m.bleu - 0.75) < 1e-9);
    CHECK(std::abs(m.rouge1.f1 - 0.625) < 1e-9);
    std::vector<double> bad{0, 0};
    CHECK_THROWS_AS(weighted_mean(rs, bad), InvalidArgument);
}
