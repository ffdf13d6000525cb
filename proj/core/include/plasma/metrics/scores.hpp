#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "plasma/metrics/tokenize.hpp"

namespace plasma::metrics {

struct RougeScore {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

/// f1 = 2pr/(p+r), or 0 when p + r == 0.
RougeScore make_rouge(double recall, double precision);

/// Clipped n-gram overlap. Either side without n-grams scores all zeros.
RougeScore rouge_n(const Tokens& cand, const Tokens& ref, int n);

/// LCS-based ROUGE-L.
RougeScore rouge_l(const Tokens& cand, const Tokens& ref);

/// Length of the longest common subsequence.
std::size_t lcs_length(const Tokens& a, const Tokens& b);

/// Sentence-level BLEU: geometric mean of clipped n-gram precisions for
/// n <= min(max_n, |cand|), add-one smoothing when an order n >= 2 has no
/// match, and brevity penalty exp(1 - r/c) against the closest reference
/// length when c < r.
double bleu(const Tokens& cand, std::span<const Tokens> refs, int max_n = 4);

struct MeteorParams {
    double alpha = 0.9;
    double gamma = 0.5;
    double beta = 3.0;
};

/// METEOR without synonym/paraphrase stages: exact then Porter-stem unigram
/// alignment, F_mean = PR / (alpha*P + (1-alpha)*R), fragmentation penalty
/// gamma * (chunks/matches)^beta.
double meteor_lite(const Tokens& cand, const Tokens& ref, const MeteorParams& params = {});

/// dot(u,v)/(|u||v|); 0 when either norm is 0. Throws on dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

/// Token embedder used by the embedding-similarity score and tone energy.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    /// Zero vector for tokens the embedder cannot represent.
    virtual std::vector<double> embed(std::string_view token) const = 0;
    virtual double similarity(std::string_view a, std::string_view b) const;
};

/// Each known token is its own axis; unknown tokens embed to zero.
class OneHotEmbedder final : public Embedder {
public:
    OneHotEmbedder() = default;
    explicit OneHotEmbedder(std::span<const Tokens> texts);

    void add(std::string_view token);
    std::size_t dim() const override { return index_.size(); }
    std::vector<double> embed(std::string_view token) const override;
    double similarity(std::string_view a, std::string_view b) const override;

private:
    std::unordered_map<std::string, std::size_t> index_;
};

/// Greedy-matching embedding similarity (BERTScore-style F1 with a pluggable
/// embedder). If any pairwise cosine is negative, every similarity is mapped
/// through (x+1)/2 before matching. Zero-vector tokens contribute 0.
double embed_sim_score(const Tokens& cand, const Tokens& ref, const Embedder& embedder);

struct MetricReport {
    RougeScore rouge1;
    RougeScore rouge2;
    RougeScore rougeL;
    double bleu = 0.0;
    double meteor = 0.0;
    double embed_sim = 0.0;
};

MetricReport score_pair(const Tokens& cand, const Tokens& ref, const Embedder& embedder);

/// Weighted mean of reports; weights must be nonnegative with a positive sum.
/// An empty input gives an all-zero report.
MetricReport weighted_mean(std::span<const MetricReport> reports, std::span<const double> weights);

}  // namespace plasma::metrics
