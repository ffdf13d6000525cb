#include "plasma/corpus/agreement.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <utility>

#include "plasma/metrics/tokenize.hpp"
#include "plasma/util/error.hpp"

namespace plasma::corpus {

namespace {

using TokenKey = std::pair<std::size_t, std::size_t>;  // (answer, token index)

class AnswerTokens {
public:
    explicit AnswerTokens(const Thread& t) {
        for (const auto& a : t.answers) tokens_.push_back(metrics::tokenize_with_offsets(a));
    }

    std::set<TokenKey> covered(const SpanAnnotation& s) const {
        std::set<TokenKey> out;
        const auto& toks = tokens_.at(s.answer_idx);
        for (std::size_t i = 0; i < toks.size(); ++i)
            if (toks[i].start < s.end && toks[i].end > s.start) out.emplace(s.answer_idx, i);
        return out;
    }

private:
    std::vector<std::vector<metrics::TokenSpan>> tokens_;
};

double iou(const std::set<TokenKey>& a, const std::set<TokenKey>& b) {
    std::size_t inter = 0;
    for (const auto& k : a) inter += b.count(k);
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

SpanAgreement span_agreement(const Thread& a, const Thread& b) {
    if (a.id != b.id) throw InvalidArgument("span_agreement: annotations refer to different threads");
    if (a.answers != b.answers) throw InvalidArgument("span_agreement: thread " + a.id + " answers differ");
    if (a.spans.empty() && b.spans.empty()) return {1.0, 1.0};
    if (a.spans.empty() || b.spans.empty()) return {0.0, 0.0};

    const AnswerTokens toks(a);
    std::vector<std::set<TokenKey>> ta, tb;
    for (const auto& s : a.spans) ta.push_back(toks.covered(s));
    for (const auto& s : b.spans) tb.push_back(toks.covered(s));

    auto matched_fraction = [](const std::vector<SpanAnnotation>& xs, const std::vector<std::set<TokenKey>>& tx,
                               const std::vector<SpanAnnotation>& ys, const std::vector<std::set<TokenKey>>& ty) {
        std::size_t hit = 0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = 0; j < ys.size(); ++j)
                if (xs[i].label == ys[j].label && iou(tx[i], ty[j]) >= kSpanMatchThreshold) {
                    ++hit;
                    break;
                }
        return static_cast<double>(hit) / static_cast<double>(xs.size());
    };
    const double p = matched_fraction(a.spans, ta, b.spans, tb);
    const double r = matched_fraction(b.spans, tb, a.spans, ta);
    const double f1 = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;

    PerspectiveArray<std::set<TokenKey>> la, lb;
    for (std::size_t i = 0; i < a.spans.size(); ++i) la[index_of(a.spans[i].label)].insert(ta[i].begin(), ta[i].end());
    for (std::size_t i = 0; i < b.spans.size(); ++i) lb[index_of(b.spans[i].label)].insert(tb[i].begin(), tb[i].end());
    double jsum = 0.0;
    std::size_t present = 0;
    for (std::size_t p_i = 0; p_i < kNumPerspectives; ++p_i) {
        const bool in_a = std::any_of(a.spans.begin(), a.spans.end(),
                                      [&](const SpanAnnotation& s) { return index_of(s.label) == p_i; });
        const bool in_b = std::any_of(b.spans.begin(), b.spans.end(),
                                      [&](const SpanAnnotation& s) { return index_of(s.label) == p_i; });
        if (!in_a && !in_b) continue;
        ++present;
        jsum += iou(la[p_i], lb[p_i]);
    }
    return {f1, present ? jsum / static_cast<double>(present) : 0.0};
}

SummaryAgreement summary_agreement(const std::map<Perspective, std::string>& a,
                                   const std::map<Perspective, std::string>& b, const metrics::Embedder& embedder) {
    std::set<Perspective> labels;
    for (const auto& [p, _] : a) labels.insert(p);
    for (const auto& [p, _] : b) labels.insert(p);
    if (labels.empty()) return {1.0, 1.0, 1.0, 1.0};

    SummaryAgreement out;
    for (Perspective p : labels) {
        auto ia = a.find(p);
        auto ib = b.find(p);
        if (ia == a.end() || ib == b.end()) continue;
        const auto ca = metrics::tokenize_eval(ia->second);
        const auto cb = metrics::tokenize_eval(ib->second);
        out.rouge1 += metrics::rouge_n(ca, cb, 1).f1;
        out.rouge2 += metrics::rouge_n(ca, cb, 2).f1;
        out.rougeL += metrics::rouge_l(ca, cb).f1;
        out.embed_sim += metrics::embed_sim_score(ca, cb, embedder);
    }
    const double n = static_cast<double>(labels.size());
    out.rouge1 /= n;
    out.rouge2 /= n;
    out.rougeL /= n;
    out.embed_sim /= n;
    return out;
}

AgreementReport corpus_agreement(const std::vector<Thread>& a, const std::vector<Thread>& b) {
    std::unordered_map<std::string, const Thread*> by_id;
    for (const auto& t : b) by_id.emplace(t.id, &t);

    metrics::OneHotEmbedder embedder;
    for (const auto* side : {&a, &b})
        for (const auto& t : *side)
            for (const auto& [_, s] : t.summaries)
                for (const auto& tok : metrics::tokenize_eval(s)) embedder.add(tok);

    AgreementReport r;
    std::size_t matched_b = 0;
    for (const auto& ta : a) {
        auto it = by_id.find(ta.id);
        if (it == by_id.end()) {
            ++r.threads_unmatched;
            continue;
        }
        ++matched_b;
        const auto span = span_agreement(ta, *it->second);
        const auto sum = summary_agreement(ta.summaries, it->second->summaries, embedder);
        r.span_f1 += span.f1;
        r.span_jaccard += span.jaccard;
        r.summary_rouge1 += sum.rouge1;
        r.summary_rouge2 += sum.rouge2;
        r.summary_rougeL += sum.rougeL;
        r.summary_embed_sim += sum.embed_sim;
        ++r.threads_compared;
    }
    r.threads_unmatched += b.size() - matched_b;
    if (r.threads_compared > 0) {
        const double n = static_cast<double>(r.threads_compared);
        r.span_f1 /= n;
        r.span_jaccard /= n;
        r.summary_rouge1 /= n;
        r.summary_rouge2 /= n;
        r.summary_rougeL /= n;
        r.summary_embed_sim /= n;
    }
    return r;
}

}  // namespace plasma::corpus
