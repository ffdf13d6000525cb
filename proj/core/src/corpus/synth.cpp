#include "plasma/corpus/synth.hpp"

#include <algorithm>
#include <set>

#include "plasma/prompt/profile.hpp"
#include "plasma/util/error.hpp"
#include "plasma/util/rng.hpp"

namespace plasma::corpus {

SynthConfig SynthConfig::defaults(std::size_t threads) {
    SynthConfig c;
    c.threads = threads;
    c.vocab[index_of(Perspective::Information)] = {"symptoms", "diagnosis", "condition", "chronic", "typically",
                                                   "known",    "facts",     "details",   "disorder", "clinical",
                                                   "levels",   "stage",     "common",    "indicates", "knowledge",
                                                   "describes"};
    c.vocab[index_of(Perspective::Cause)] = {"because", "due",       "triggered", "reason",   "caused",   "results",
                                             "leads",   "stress",    "infection", "deficiency", "genetics", "bacteria",
                                             "inflammation", "hormonal", "exposure", "origin"};
    c.vocab[index_of(Perspective::Suggestion)] = {"recommend", "advise",  "should", "consider", "try",      "consult",
                                                  "rest",      "hydrate", "avoid",  "exercise", "ointment", "stretch",
                                                  "sleep",     "limit",   "prefer", "doctor"};
    c.vocab[index_of(Perspective::Experience)] = {"my",      "personally", "felt",   "tried",    "noticed",
                                                  "helped",  "years",      "remember", "story",  "worked",
                                                  "myself",  "struggled",  "happened", "week",   "sister",
                                                  "recovered"};
    c.vocab[index_of(Perspective::Question)] = {"why",    "what",     "how",     "whether", "wondering", "asking",
                                                "unclear", "curious", "did",     "does",    "which",     "when",
                                                "clarify", "query",   "really",  "sure"};
    c.filler = {"thanks", "hope", "this", "helps", "good", "luck", "also", "well",
                "anyway", "friend", "honestly", "okay", "so", "just", "maybe", "then"};
    c.topics = {"headache", "rash",    "cough",     "fever",      "insomnia", "acne",
                "allergy",  "fatigue", "nausea",    "dizziness",  "toothache", "heartburn"};
    c.categories = {"Infectious Diseases", "Women's Health",   "STDs",         "Mental Health",
                    "Heart Diseases",      "Other - Health",   "Skin Conditions", "First Aid",
                    "Diabetes",            "Allergies",        "Dental",       "Cancer",
                    "Men's Health",        "Diet & Fitness",   "Respiratory Diseases", "Alternative Medicine",
                    "Other - Diseases"};
    return c;
}

void check_vocabularies(const SynthConfig& config) {
    std::set<std::string> seen;
    auto claim = [&](const std::string& w, std::string_view owner) {
        if (w.empty()) throw InvalidArgument("synthetic vocabulary contains an empty word");
        if (!seen.insert(w).second)
            throw InvalidArgument("synthetic vocabularies overlap on word '" + w + "' (" + std::string(owner) + ")");
    };
    for (Perspective p : kAllPerspectives) {
        const auto& v = config.vocab[index_of(p)];
        if (v.empty()) throw InvalidArgument("empty vocabulary for " + std::string(label_name(p)));
        for (const auto& w : v) claim(w, label_name(p));
    }
    for (const auto& w : config.filler) claim(w, "filler");
}

Dataset synthesize_corpus(const SynthConfig& cfg, std::uint64_t seed) {
    check_vocabularies(cfg);
    if (cfg.min_spans < 1 || cfg.min_spans > cfg.max_spans) throw InvalidArgument("invalid span count range");
    if (cfg.min_labels < 1 || cfg.min_labels > cfg.max_labels) throw InvalidArgument("invalid label count range");
    if (cfg.min_answers < 1 || cfg.min_answers > cfg.max_answers || cfg.max_answers > kMaxAnswers)
        throw InvalidArgument("invalid answer count range");
    if (cfg.min_span_words < 1 || cfg.min_span_words > cfg.max_span_words)
        throw InvalidArgument("invalid span length range");
    if (cfg.topics.empty() || cfg.categories.empty() || cfg.filler.empty())
        throw InvalidArgument("topics, categories and filler must be nonempty");

    Rng rng(seed);
    auto pick = [&](const std::vector<std::string>& v) -> const std::string& { return v[rng.below(v.size())]; };

    Dataset ds;
    ds.threads.reserve(cfg.threads);
    for (std::size_t n = 0; n < cfg.threads; ++n) {
        Thread t;
        t.id = "synth-" + std::to_string(seed) + "-" + std::to_string(n);
        t.category = pick(cfg.categories);
        const std::string& topic = pick(cfg.topics);
        switch (rng.below(3)) {
            case 0: t.question = "help with my " + topic + " please ?"; break;
            case 1: t.question = topic + " problem , any advice ?"; break;
            default: t.question = "dealing with " + topic + " lately"; break;
        }

        const auto n_spans = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(cfg.min_spans),
                                                                   static_cast<std::int64_t>(cfg.max_spans)));
        const std::size_t max_labels = std::min({cfg.max_labels, n_spans, kNumPerspectives});
        const std::size_t min_labels = std::min(cfg.min_labels, max_labels);
        const auto n_labels = static_cast<std::size_t>(
            rng.between(static_cast<std::int64_t>(min_labels), static_cast<std::int64_t>(max_labels)));
        std::vector<Perspective> labels(kAllPerspectives.begin(), kAllPerspectives.end());
        rng.shuffle(labels.begin(), labels.end());
        labels.resize(n_labels);

        std::vector<Perspective> span_labels(labels);
        while (span_labels.size() < n_spans) span_labels.push_back(labels[rng.below(labels.size())]);
        rng.shuffle(span_labels.begin(), span_labels.end());

        const std::size_t max_ans = std::min(cfg.max_answers, n_spans);
        const auto n_answers = static_cast<std::size_t>(rng.between(
            static_cast<std::int64_t>(std::min(cfg.min_answers, max_ans)), static_cast<std::int64_t>(max_ans)));
        // Spans go to answers in order; each answer gets at least one.
        std::vector<std::size_t> owner(n_spans);
        for (std::size_t i = 0; i < n_spans; ++i) owner[i] = i < n_answers ? i : rng.below(n_answers);
        std::sort(owner.begin(), owner.end());

        t.answers.assign(n_answers, "");
        std::vector<std::vector<std::string>> span_words(n_spans);
        for (std::size_t a = 0; a < n_answers; ++a) {
            std::string& text = t.answers[a];
            auto add_sentence = [&](const std::vector<std::string>& words) -> std::pair<std::size_t, std::size_t> {
                if (!text.empty()) text += ' ';
                const std::size_t start = text.size();
                for (std::size_t w = 0; w < words.size(); ++w) {
                    if (w) text += ' ';
                    text += words[w];
                }
                const std::size_t end = text.size();
                text += " .";
                return {start, end};
            };
            auto filler_sentence = [&] {
                std::vector<std::string> words;
                const auto len = static_cast<std::size_t>(rng.between(2, 4));
                for (std::size_t w = 0; w < len; ++w) words.push_back(pick(cfg.filler));
                add_sentence(words);
            };
            if (rng.uniform() < cfg.filler_probability) filler_sentence();
            for (std::size_t i = 0; i < n_spans; ++i) {
                if (owner[i] != a) continue;
                const auto& vocab = cfg.vocab[index_of(span_labels[i])];
                const auto len = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(cfg.min_span_words),
                                                                      static_cast<std::int64_t>(cfg.max_span_words)));
                for (std::size_t w = 0; w < len; ++w) span_words[i].push_back(pick(vocab));
                const auto [start, end] = add_sentence(span_words[i]);
                SpanAnnotation s;
                s.answer_idx = a;
                s.start = start;  // ASCII text: byte offsets are code point offsets
                s.end = end;
                s.label = span_labels[i];
                s.text = text.substr(start, end - start);
                t.spans.push_back(std::move(s));
            }
            if (rng.uniform() < cfg.filler_probability * 0.5) filler_sentence();
        }

        for (Perspective p : labels) {
            std::string summary(prompt::profile_for(p).anchor_text);
            std::size_t used = 0;
            for (std::size_t i = 0; i < n_spans && used < cfg.summary_words; ++i) {
                if (span_labels[i] != p) continue;
                for (const auto& w : span_words[i]) {
                    if (used == cfg.summary_words) break;
                    summary += ' ' + w;
                    ++used;
                }
            }
            summary += " .";
            t.summaries[p] = std::move(summary);
        }
        ds.threads.push_back(std::move(t));
    }
    return ds;
}

}  // namespace plasma::corpus
