#include "plasma/prompt/profile.hpp"

#include <algorithm>
#include <array>

namespace plasma::prompt {

namespace {

metrics::Tokens word_tokens(std::string_view text) {
    metrics::Tokens out;
    for (auto& t : metrics::tokenize_eval(text))
        if (std::any_of(t.begin(), t.end(), [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); }))
            out.push_back(std::move(t));
    return out;
}

PerspectiveProfile make(Perspective p, std::string_view def, std::string_view anchor, std::string_view tone) {
    return {p, def, anchor, tone, word_tokens(tone)};
}

const std::array<PerspectiveProfile, kNumPerspectives>& profiles() {
    static const std::array<PerspectiveProfile, kNumPerspectives> table = {
        make(Perspective::Information,
             "Defined as knowledge about diseases, disorders, and health-related facts, providing insights into "
             "symptoms and diagnosis.",
             "for information purposes", "Informative, Educational"),
        make(Perspective::Cause,
             "Defined as reasons responsible for the occurrence of a particular medical condition, symptom, or "
             "disease",
             "some of the causes", "Explanatory, Causal"),
        make(Perspective::Suggestion,
             "Defined as advice or recommendations to assist users in making informed medical decisions, solving "
             "problems, or improving health issues.",
             "it is suggested", "Advisory, Recommending"),
        make(Perspective::Experience,
             "Defined as individual experiences, anecdotes, or firsthand insights related to health, medical "
             "treatments, medication usage, and coping strategies.",
             "in user's experience", "Personal, Narrative"),
        make(Perspective::Question, "Defined as inquiry made for deeper understanding.", "it is inquired",
             "Seeking Understanding"),
    };
    return table;
}

const std::array<metrics::Tokens, kNumPerspectives>& anchors() {
    static const auto table = [] {
        std::array<metrics::Tokens, kNumPerspectives> out;
        for (std::size_t i = 0; i < kNumPerspectives; ++i) out[i] = metrics::tokenize_eval(profiles()[i].anchor_text);
        return out;
    }();
    return table;
}

}  // namespace

const PerspectiveProfile& profile_for(Perspective label) { return profiles()[index_of(label)]; }

const metrics::Tokens& anchor_tokens(Perspective label) { return anchors()[index_of(label)]; }

bool starts_with_anchor(const metrics::Tokens& tokens, Perspective label) {
    const auto& a = anchor_tokens(label);
    return tokens.size() >= a.size() && std::equal(a.begin(), a.end(), tokens.begin());
}

}  // namespace plasma::prompt
