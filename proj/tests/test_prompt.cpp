#include <doctest.h>

#include <algorithm>
#include <bit>
#include <string>

#include "plasma/corpus/synth.hpp"
#include "plasma/prompt/profile.hpp"
#include "plasma/prompt/template.hpp"
#include "plasma/util/error.hpp"

using namespace plasma;
using namespace plasma::prompt;

namespace {

corpus::Thread thread() {
    corpus::Thread t;
    t.id = "p1";
    t.question = "How do I\nsleep better?";
    t.answers = {"Avoid coffee.", "I read before bed"};
    return t;
}

std::vector<SectionKind> kinds(const std::vector<PromptSection>& s) {
    std::vector<SectionKind> out;
    for (const auto& x : s) out.push_back(x.kind);
    return out;
}

}  // namespace

TEST_CASE("profiles") {
    CHECK(anchor_tokens(Perspective::Suggestion) == metrics::Tokens{"it", "is", "suggested"});
    CHECK(anchor_tokens(Perspective::Experience) == metrics::Tokens{"in", "user's", "experience"});
    CHECK(profile_for(Perspective::Information).anchor_text == "for information purposes");
    CHECK(profile_for(Perspective::Cause).anchor_text == "some of the causes");
    CHECK(profile_for(Perspective::Question).anchor_text == "it is inquired");
    CHECK(profile_for(Perspective::Suggestion).tone_label == "Advisory, Recommending");
    CHECK(profile_for(Perspective::Question).tone_label == "Seeking Understanding");
    CHECK(profile_for(Perspective::Suggestion).tone_keywords == metrics::Tokens{"advisory", "recommending"});
    for (Perspective p : kAllPerspectives) CHECK(!profile_for(p).definition.empty());

    CHECK(starts_with_anchor({"it", "is", "suggested", "to"}, Perspective::Suggestion));
    CHECK_FALSE(starts_with_anchor({"it", "is"}, Perspective::Suggestion));
}

TEST_CASE("prompt parts") {
    CHECK(PromptParts::parse("P+D+T").name() == "P+D+T");
    CHECK(PromptParts::parse("P,D,B,T") == PromptParts::all());
    CHECK(PromptParts::parse("full") == PromptParts::all());
    CHECK(PromptParts::none().name() == "none");
    CHECK_THROWS_AS(PromptParts::parse("P+X"), InvalidArgument);
}

TEST_CASE("before and after placement") {
    corpus::Thread t = thread();
    PromptSpec spec{&t, Perspective::Suggestion, Placement::Before, PromptParts::all()};
    std::string before = build_prompt(spec);
    CHECK(before.rfind("TASK: Summarize the following content according to perspective: SUGGESTION", 0) == 0);

    auto sb = parse_prompt(before);
    CHECK(kinds(sb) == std::vector<SectionKind>{SectionKind::Task, SectionKind::Definition, SectionKind::BeginWith,
                                                SectionKind::Tone, SectionKind::Question, SectionKind::Content});
    CHECK(sb[4].body == "How do I sleep better?");
    CHECK(sb[5].body == "Avoid coffee. ||| I read before bed");
    CHECK(sb[2].body == "it is suggested");

    spec.placement = Placement::After;
    auto sa = parse_prompt(build_prompt(spec));
    CHECK(sa.front().kind == SectionKind::Question);
    auto sorted = [](std::vector<PromptSection> v) {
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
            return std::tie(a.kind, a.body) < std::tie(b.kind, b.body);
        });
        return v;
    };
    CHECK(sorted(sa) == sorted(sb));
}

TEST_CASE("section subsets parse back") {
    auto data = corpus::synthesize_corpus(corpus::SynthConfig::defaults(5), 3);
    for (const auto& t : data.threads)
        for (unsigned mask = 0; mask < 16; ++mask)
            for (Placement pl : {Placement::Before, Placement::After}) {
                PromptParts parts{bool(mask & 1), bool(mask & 2), bool(mask & 4), bool(mask & 8)};
                PromptSpec spec{&t, Perspective::Cause, pl, parts};
                auto s = parse_prompt(build_prompt(spec));
                CHECK(s.size() == 2 + std::popcount(mask));
                CHECK(std::count_if(s.begin(), s.end(), [](auto& x) { return x.kind == SectionKind::Tone; }) ==
                      (parts.tone ? 1 : 0));
            }
}

TEST_CASE("prompt errors") {
    corpus::Thread t = thread();
    t.answers.clear();
    PromptSpec spec{&t, Perspective::Cause, Placement::Before, PromptParts::all()};
    CHECK_THROWS_AS(build_prompt(spec), InvalidArgument);
    CHECK_THROWS_AS(parse_prompt("NOPE: x"), InvalidArgument);
}
