#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "plasma/corpus/thread.hpp"
#include "plasma/metrics/scores.hpp"

namespace plasma::corpus {

struct SpanAgreement {
    double f1 = 0.0;
    double jaccard = 0.0;
};

struct AgreementReport {
    double span_f1 = 0.0;
    double span_jaccard = 0.0;
    double summary_rouge1 = 0.0;
    double summary_rouge2 = 0.0;
    double summary_rougeL = 0.0;
    double summary_embed_sim = 0.0;
    std::size_t threads_compared = 0;
    std::size_t threads_unmatched = 0;
};

/// Minimum token-level intersection-over-union for two same-label spans to
/// count as the same annotation.
inline constexpr double kSpanMatchThreshold = 0.5;

/// Inter-annotator agreement for two annotations of one thread.
///
/// F1: a span "matches" when the other annotation has a span with the same
/// label whose token set overlaps it with IoU >= 0.5; precision is the matched
/// fraction of A's spans, recall the matched fraction of B's spans.
/// Jaccard: per perspective, |A_p & B_p| / |A_p | B_p| over labeled
/// (answer, token) sets, averaged over perspectives present in either side.
/// Throws InvalidArgument when the two threads differ in id or answers.
SpanAgreement span_agreement(const Thread& a, const Thread& b);

struct SummaryAgreement {
    double rouge1 = 0.0;  // F1 values
    double rouge2 = 0.0;
    double rougeL = 0.0;
    double embed_sim = 0.0;
};

/// Averages over the union of labels; a label present on one side only
/// contributes 0. Two empty maps agree perfectly.
SummaryAgreement summary_agreement(const std::map<Perspective, std::string>& a,
                                   const std::map<Perspective, std::string>& b,
                                   const metrics::Embedder& embedder);

/// Pairs threads by id and averages both agreement families. Threads present
/// in only one corpus are counted in threads_unmatched.
AgreementReport corpus_agreement(const std::vector<Thread>& a, const std::vector<Thread>& b);

}  // namespace plasma::corpus
