#include "plasma/metrics/scores.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "plasma/metrics/porter.hpp"
#include "plasma/util/error.hpp"

namespace plasma::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const Tokens& t, std::size_t n) {
    NgramCounts counts;
    if (n == 0 || t.size() < n) return counts;
    for (std::size_t i = 0; i + n <= t.size(); ++i)
        ++counts[std::vector<std::string>(t.begin() + static_cast<std::ptrdiff_t>(i),
                                          t.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return counts;
}

std::size_t clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
    std::size_t overlap = 0;
    for (const auto& [gram, c] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(c, it->second);
    }
    return overlap;
}

}  // namespace

RougeScore make_rouge(double recall, double precision) {
    RougeScore s{recall, precision, 0.0};
    if (recall + precision > 0.0) s.f1 = 2.0 * recall * precision / (recall + precision);
    return s;
}

RougeScore rouge_n(const Tokens& cand, const Tokens& ref, int n) {
    if (n < 1) throw InvalidArgument("rouge_n: n must be >= 1");
    const auto un = static_cast<std::size_t>(n);
    if (cand.size() < un || ref.size() < un) return {};
    const auto cc = count_ngrams(cand, un);
    const auto rc = count_ngrams(ref, un);
    const double overlap = static_cast<double>(clipped_overlap(cc, rc));
    return make_rouge(overlap / static_cast<double>(ref.size() - un + 1),
                      overlap / static_cast<double>(cand.size() - un + 1));
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScore rouge_l(const Tokens& cand, const Tokens& ref) {
    if (cand.empty() || ref.empty()) return {};
    const double l = static_cast<double>(lcs_length(cand, ref));
    return make_rouge(l / static_cast<double>(ref.size()), l / static_cast<double>(cand.size()));
}

double bleu(const Tokens& cand, std::span<const Tokens> refs, int max_n) {
    if (refs.empty()) throw InvalidArgument("bleu: at least one reference is required");
    if (max_n < 1) throw InvalidArgument("bleu: max_n must be >= 1");
    if (cand.empty()) return 0.0;

    const std::size_t orders = std::min(static_cast<std::size_t>(max_n), cand.size());
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= orders; ++n) {
        const auto cc = count_ngrams(cand, n);
        NgramCounts max_ref;
        for (const auto& r : refs)
            for (const auto& [gram, c] : count_ngrams(r, n)) {
                auto& slot = max_ref[gram];
                slot = std::max(slot, c);
            }
        const double matches = static_cast<double>(clipped_overlap(cc, max_ref));
        const double total = static_cast<double>(cand.size() - n + 1);
        double p = matches / total;
        if (matches == 0.0) {
            if (n == 1) return 0.0;
            p = 1.0 / (total + 1.0);
        }
        log_sum += std::log(p);
    }

    // Closest reference length, ties to the shorter one.
    const double c = static_cast<double>(cand.size());
    double r = static_cast<double>(refs.front().size());
    for (const auto& ref : refs) {
        const double len = static_cast<double>(ref.size());
        const double d = std::abs(len - c), best = std::abs(r - c);
        if (d < best || (d == best && len < r)) r = len;
    }
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return bp * std::exp(log_sum / static_cast<double>(orders));
}

double meteor_lite(const Tokens& cand, const Tokens& ref, const MeteorParams& params) {
    if (cand.empty() || ref.empty()) return 0.0;
    std::vector<std::ptrdiff_t> align(cand.size(), -1);
    std::vector<bool> used(ref.size(), false);

    auto stage = [&](auto&& key) {
        for (std::size_t i = 0; i < cand.size(); ++i) {
            if (align[i] >= 0) continue;
            const auto ki = key(cand[i]);
            for (std::size_t j = 0; j < ref.size(); ++j) {
                if (!used[j] && key(ref[j]) == ki) {
                    align[i] = static_cast<std::ptrdiff_t>(j);
                    used[j] = true;
                    break;
                }
            }
        }
    };
    stage([](const std::string& s) { return s; });
    stage([](const std::string& s) { return porter_stem(s); });

    std::size_t matches = 0, chunks = 0;
    std::ptrdiff_t prev_cand = -2, prev_ref = -2;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        if (align[i] < 0) continue;
        ++matches;
        const auto ci = static_cast<std::ptrdiff_t>(i);
        if (ci != prev_cand + 1 || align[i] != prev_ref + 1) ++chunks;
        prev_cand = ci;
        prev_ref = align[i];
    }
    if (matches == 0) return 0.0;

    const double m = static_cast<double>(matches);
    const double p = m / static_cast<double>(cand.size());
    const double r = m / static_cast<double>(ref.size());
    const double fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    const double penalty = params.gamma * std::pow(static_cast<double>(chunks) / m, params.beta);
    return fmean * (1.0 - penalty);
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw InvalidArgument("cosine: dimension mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

double Embedder::similarity(std::string_view a, std::string_view b) const {
    const auto ea = embed(a);
    const auto eb = embed(b);
    return cosine(ea, eb);
}

OneHotEmbedder::OneHotEmbedder(std::span<const Tokens> texts) {
    for (const auto& t : texts)
        for (const auto& tok : t) add(tok);
}

void OneHotEmbedder::add(std::string_view token) {
    index_.try_emplace(std::string(token), index_.size());
}

std::vector<double> OneHotEmbedder::embed(std::string_view token) const {
    std::vector<double> v(index_.size(), 0.0);
    auto it = index_.find(std::string(token));
    if (it != index_.end()) v[it->second] = 1.0;
    return v;
}

double OneHotEmbedder::similarity(std::string_view a, std::string_view b) const {
    if (!index_.contains(std::string(a)) || !index_.contains(std::string(b))) return 0.0;
    return a == b ? 1.0 : 0.0;
}

double embed_sim_score(const Tokens& cand, const Tokens& ref, const Embedder& embedder) {
    if (cand.empty() || ref.empty()) return 0.0;
    std::vector<double> sim(cand.size() * ref.size());
    bool negative = false;
    for (std::size_t i = 0; i < cand.size(); ++i)
        for (std::size_t j = 0; j < ref.size(); ++j) {
            const double s = embedder.similarity(cand[i], ref[j]);
            sim[i * ref.size() + j] = s;
            negative = negative || s < 0.0;
        }
    if (negative) {
        // Zero-vector tokens keep similarity 0 after the remap.
        std::vector<bool> cand_zero(cand.size()), ref_zero(ref.size());
        for (std::size_t i = 0; i < cand.size(); ++i) {
            const auto e = embedder.embed(cand[i]);
            cand_zero[i] = std::all_of(e.begin(), e.end(), [](double x) { return x == 0.0; });
        }
        for (std::size_t j = 0; j < ref.size(); ++j) {
            const auto e = embedder.embed(ref[j]);
            ref_zero[j] = std::all_of(e.begin(), e.end(), [](double x) { return x == 0.0; });
        }
        for (std::size_t i = 0; i < cand.size(); ++i)
            for (std::size_t j = 0; j < ref.size(); ++j) {
                double& s = sim[i * ref.size() + j];
                s = (cand_zero[i] || ref_zero[j]) ? 0.0 : (s + 1.0) / 2.0;
            }
    }
    double precision = 0.0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        double best = sim[i * ref.size()];
        for (std::size_t j = 1; j < ref.size(); ++j) best = std::max(best, sim[i * ref.size() + j]);
        precision += best;
    }
    precision /= static_cast<double>(cand.size());
    double recall = 0.0;
    for (std::size_t j = 0; j < ref.size(); ++j) {
        double best = sim[j];
        for (std::size_t i = 1; i < cand.size(); ++i) best = std::max(best, sim[i * ref.size() + j]);
        recall += best;
    }
    recall /= static_cast<double>(ref.size());
    if (precision + recall <= 0.0) return 0.0;
    return std::clamp(2.0 * precision * recall / (precision + recall), 0.0, 1.0);
}

MetricReport score_pair(const Tokens& cand, const Tokens& ref, const Embedder& embedder) {
    MetricReport r;
    r.rouge1 = rouge_n(cand, ref, 1);
    r.rouge2 = rouge_n(cand, ref, 2);
    r.rougeL = rouge_l(cand, ref);
    const Tokens refs[] = {ref};
    r.bleu = bleu(cand, refs);
    r.meteor = meteor_lite(cand, ref);
    r.embed_sim = embed_sim_score(cand, ref, embedder);
    return r;
}

MetricReport weighted_mean(std::span<const MetricReport> reports, std::span<const double> weights) {
    if (reports.size() != weights.size()) throw InvalidArgument("weighted_mean: size mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw InvalidArgument("weighted_mean: negative weight");
        total += w;
    }
    MetricReport out;
    if (reports.empty()) return out;
    if (!(total > 0.0)) throw InvalidArgument("weighted_mean: weights sum to zero");
    auto acc = [&](RougeScore& dst, const RougeScore& src, double w) {
        dst.recall += w * src.recall;
        dst.precision += w * src.precision;
        dst.f1 += w * src.f1;
    };
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const double w = weights[i] / total;
        acc(out.rouge1, reports[i].rouge1, w);
        acc(out.rouge2, reports[i].rouge2, w);
        acc(out.rougeL, reports[i].rougeL, w);
        out.bleu += w * reports[i].bleu;
        out.meteor += w * reports[i].meteor;
        out.embed_sim += w * reports[i].embed_sim;
    }
    return out;
}

}  // namespace plasma::metrics
