#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "plasma/corpus/synth.hpp"
#include "plasma/energy/classifier.hpp"
#include "plasma/energy/energy.hpp"
#include "plasma/harness/pipeline.hpp"
#include "plasma/nn/optim.hpp"
#include "plasma/prompt/profile.hpp"
#include "plasma/util/error.hpp"
#include "plasma/util/rng.hpp"
#include "support/gradcheck.hpp"

using namespace plasma;
using namespace plasma::energy;
using metrics::Tokens;

namespace {

Tokens toks(const char* s) { return metrics::tokenize_eval(s); }

class TableWords final : public metrics::Embedder {
public:
    explicit TableWords(std::map<std::string, std::vector<double>> t) : t_(std::move(t)) {}
    std::size_t dim() const override { return 2; }
    std::vector<double> embed(std::string_view w) const override {
        auto it = t_.find(std::string(w));
        return it == t_.end() ? std::vector<double>{0, 0} : it->second;
    }

private:
    std::map<std::string, std::vector<double>> t_;
};

struct Fixture {
    std::vector<corpus::Thread> train, test;
    ToneLexicon lexicon = ToneLexicon::bundled();
    nn::Vocab vocab;
    PerspectiveClassifier clf;

    Fixture() {
        auto d = corpus::synthesize_corpus(corpus::SynthConfig::defaults(160), 21);
        train.assign(d.threads.begin(), d.threads.begin() + 120);
        test.assign(d.threads.begin() + 120, d.threads.end());
        vocab = harness::build_run_vocab(train, lexicon, 4000);
        auto data = harness::span_examples(train);
        clf = train_classifier(data, vocab, {}, 5);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("weights") {
    EnergyWeights w;
    CHECK(w.total() == doctest::Approx(1.0));
    auto n = w.without(2);
    CHECK(n.alpha2 == 0.0);
    CHECK(n.alpha1 == doctest::Approx(0.5));
    CHECK(n.total() == doctest::Approx(1.0));
    CHECK_THROWS_AS((EnergyWeights{0, 0, 0}).validate(), InvalidArgument);
    CHECK_THROWS_AS((EnergyWeights{-1, 1, 1}).validate(), InvalidArgument);
    CHECK_THROWS_AS((EnergyWeights{1, 0, 0}).without(1), InvalidArgument);
    CHECK(parse_anchor_score("recall") == AnchorScore::Recall);
}

TEST_CASE("combine energy") {
    Vec5 all{0.6, 0.6, 0.6, 0.6, 0.6};
    for (double x : combine_energy({}, all, all, all)) CHECK(x == doctest::Approx(0.6));
    Vec5 ep{0.1, 0.2, 0.3, 0.4, 0.5}, z{};
    CHECK(combine_energy({1, 0, 0}, ep, z, all) == ep);
    Vec5 a{1.0}, b{0.5}, c{0.0};
    CHECK(combine_energy({0.5, 0.3, 0.2}, a, b, c)[0] == doctest::Approx(0.65));
}

TEST_CASE("energy softmax") {
    for (double p : energy_softmax({1, 1, 1, 1, 1})) CHECK(std::abs(p - 0.2) < 1e-12);
    auto p = energy_softmax({2, 1, 1, 1, 1});
    const double want = std::exp(-0.5) / (std::exp(-0.5) + 4 * std::exp(-1.0));
    CHECK(p[0] == doctest::Approx(want).epsilon(1e-12));
    CHECK(std::abs(p[0] - 0.2919) < 1e-4);
    CHECK(std::abs(p[1] - 0.1770) < 1e-4);
    CHECK(energy_softmax({0, 1, 1, 1, 1})[0] < 1e-300);

    Rng rng(17);
    for (int i = 0; i < 1000; ++i) {
        Vec5 e;
        for (auto& x : e) x = rng.uniform(kEnergyEps, 10.0);
        auto q = energy_softmax(e);
        double s = 0;
        for (double x : q) s += x;
        REQUIRE(std::abs(s - 1.0) < 1e-12);
        REQUIRE(std::max_element(q.begin(), q.end()) - q.begin() == std::max_element(e.begin(), e.end()) - e.begin());
    }

    nn::Tape tape;
    Vec5 e{0.3, 0.9, 0.1, 0.5, 2.0};
    nn::Var g = energy_softmax(tape.constant(nn::Tensor::row({e.begin(), e.end()})));
    auto h = energy_softmax(e);
    for (std::size_t i = 0; i < 5; ++i) CHECK(g.value()[i] == doctest::Approx(h[i]).epsilon(1e-12));
}

TEST_CASE("perspective loss") {
    Vec5 u{0.2, 0.2, 0.2, 0.2, 0.2};
    CHECK(perspective_loss(u, Perspective::Cause) == doctest::Approx(1.6094).epsilon(1e-4));
    CHECK(perspective_loss({0, 0, 1, 0, 0}, Perspective::Suggestion) == 0.0);
    CHECK(perspective_loss({0, 0, 1, 0, 0}, Perspective::Cause) == doctest::Approx(27.631).epsilon(1e-4));
    CHECK(total_loss(1.0, 0.5) == 1.5);
    CHECK(total_loss(2.5, 0.0) == 2.5);
    CHECK_THROWS_AS(total_loss(NAN, 0.0), NumericError);
}

TEST_CASE("anchor energy") {
    auto e = anchor_energy(toks("it is suggested to rest"));
    CHECK(e[index_of(Perspective::Suggestion)] == doctest::Approx(1.0));
    CHECK(e[index_of(Perspective::Information)] == 0.0);
    CHECK(anchor_energy(toks("in my experience"))[index_of(Perspective::Experience)] == doctest::Approx(2.0 / 3.0));
    CHECK(anchor_energy(toks("it"))[index_of(Perspective::Suggestion)] == doctest::Approx(0.5));
    CHECK(anchor_energy(toks("it"), AnchorScore::Precision)[index_of(Perspective::Suggestion)] == 1.0);
    CHECK(anchor_energy({})[0] == 0.0);
}

TEST_CASE("tone energy") {
    ToneLexicon lex;
    std::vector<Tokens> words;
    for (Perspective p : kAllPerspectives) words.push_back(lex.keywords(p));
    metrics::OneHotEmbedder onehot(words);
    auto e = tone_energy(lex.keywords(Perspective::Suggestion), lex, onehot);
    CHECK(e[index_of(Perspective::Suggestion)] == doctest::Approx(1.0));
    CHECK(e[index_of(Perspective::Cause)] == 0.0);
    for (double x : tone_energy(toks("zzz qqq"), lex, onehot)) CHECK(x == 0.0);

    std::istringstream in("SUGGESTION\tadvisory,try\nCAUSE\tbecause\n");
    ToneLexicon small = ToneLexicon::parse(in);
    TableWords emb({{"advisory", {1, 0}}, {"recommending", {1, 0}}, {"try", {0, 1}}, {"rest", {1, 1}}});
    // SUGGESTION keywords advisory, recommending, try -> mean (2/3, 1/3); summary "rest" -> (1, 1)
    const double want = (2.0 / 3 + 1.0 / 3) / (std::sqrt(5.0 / 9) * std::sqrt(2.0));
    CHECK(tone_energy(toks("rest"), small, emb)[index_of(Perspective::Suggestion)] == doctest::Approx(want));

    std::istringstream bad("NOPE\tx\n");
    CHECK_THROWS_AS(ToneLexicon::parse(bad), InvalidArgument);
    auto bundled = ToneLexicon::bundled();
    for (Perspective p : kAllPerspectives) CHECK(bundled.keywords(p).size() > prompt::profile_for(p).tone_keywords.size());
}

TEST_CASE("classifier") {
    auto& f = fixture();
    PerspectiveClassifier zero(f.vocab.size(), 8, 0.0, 1);
    std::vector<int> ids{4, 5, 6};
    for (double p : zero.predict(ids)) CHECK(p == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(zero.predict(std::vector<int>{}), InvalidArgument);

    auto held = harness::span_examples(f.test);
    CHECK(classifier_accuracy(f.clf, held, f.vocab) >= 0.95);
    auto again = train_classifier(harness::span_examples(f.train), f.vocab, {}, 5);
    CHECK(again.params() == f.clf.params());

    for (const auto& ex : held)
        if (ex.label == Perspective::Suggestion) {
            CHECK(f.clf.classify(f.vocab.encode_text(ex.text)) == Perspective::Suggestion);
            break;
        }
    auto sum = f.clf.predict(f.vocab.encode_text(held[0].text));
    CHECK(std::abs(sum[0] + sum[1] + sum[2] + sum[3] + sum[4] - 1.0) < 1e-9);

    std::vector<LabeledText> one{{"it hurts", Perspective::Cause}};
    CHECK_THROWS_AS(train_classifier(one, f.vocab, {}, 1), InvalidArgument);
}

TEST_CASE("soft energies match hard energies on one-hot rows") {
    auto& f = fixture();
    TableEmbedder emb(f.vocab, f.clf.params().get("cls.embed"));
    EnergyScorer scorer(f.vocab, f.clf, f.lexicon, emb, {0.5, 0.3, 0.2});
    for (const char* text : {"it is suggested to consult a doctor", "some of the causes", "why", "qqq zzz it"}) {
        CAPTURE(text);
        auto tokens = toks(text);
        auto ids = f.vocab.encode(tokens);
        auto hard = scorer.score(tokens);
        nn::Tape tape;
        nn::Tensor rows = nn::Tensor::matrix(ids.size(), f.vocab.size());
        for (std::size_t t = 0; t < ids.size(); ++t) rows(t, ids[t]) = 1.0;
        nn::Bound cb(tape, f.clf.params(), nn::TrainMask{});
        auto soft = EnergyScorer::breakdown(scorer.soft(cb, tape.constant(rows)));
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(std::abs(soft.e_p[i] - hard.e_p[i]) < 1e-9);
            CHECK(std::abs(soft.e_a[i] - hard.e_a[i]) < 1e-9);
            CHECK(std::abs(soft.e_t[i] - hard.e_t[i]) < 1e-9);
            CHECK(std::abs(soft.p[i] - hard.p[i]) < 1e-9);
            CHECK(hard.e_combined[i] <= 1.0 + 1e-12);
        }
    }
    auto s = scorer.score_text("it is suggested");
    CHECK(s.e_a[index_of(Perspective::Suggestion)] == 1.0);
}

TEST_CASE("perspective loss gradient through soft distributions") {
    auto& f = fixture();
    TableEmbedder emb(f.vocab, f.clf.params().get("cls.embed"));
    EnergyScorer scorer(f.vocab, f.clf, f.lexicon, emb, {});
    Rng rng(4);
    nn::ParamSet ps;
    ps.add("z", testing::random_tensor(rng, 4, f.vocab.size(), -2, 2));
    auto res = testing::grad_check(ps, nn::TrainMask::all_of(ps), [&](nn::Tape& tape, const nn::Bound& b) {
        nn::Bound cb(tape, f.clf.params(), nn::TrainMask{});
        return EnergyScorer::loss(scorer.soft(cb, nn::softmax_rows(b["z"])), Perspective::Suggestion);
    });
    CAPTURE(res.worst);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("minimizing the perspective loss moves argmax energy to the label") {
    auto& f = fixture();
    TableEmbedder emb(f.vocab, f.clf.params().get("cls.embed"));
    EnergyScorer scorer(f.vocab, f.clf, f.lexicon, emb, {1, 0, 0});
    nn::ParamSet ps;
    ps.add("z", nn::Tensor::matrix(3, f.vocab.size()));
    nn::TrainMask mask = nn::TrainMask::all_of(ps);
    nn::Adam adam(ps, mask, {.lr = 0.1});
    for (int i = 0; i < 60; ++i) {
        nn::Tape tape;
        nn::Bound b(tape, ps, mask);
        nn::Bound cb(tape, f.clf.params(), nn::TrainMask{});
        tape.backward(EnergyScorer::loss(scorer.soft(cb, nn::softmax_rows(b["z"])), Perspective::Cause));
        adam.step(ps, b.gradients(ps, mask));
    }
    nn::Tape tape;
    nn::Bound cb(tape, f.clf.params(), nn::TrainMask{});
    auto e = EnergyScorer::breakdown(scorer.soft(cb, nn::softmax_rows(tape.constant(ps.get("z"))))).e_combined;
    CHECK(std::max_element(e.begin(), e.end()) - e.begin() == index_of(Perspective::Cause));
}
