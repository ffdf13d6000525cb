#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plasma/corpus/perspective.hpp"
#include "plasma/energy/classifier.hpp"
#include "plasma/metrics/scores.hpp"
#include "plasma/nn/params.hpp"
#include "plasma/nn/vocab.hpp"

namespace plasma::energy {

using Vec5 = PerspectiveArray<double>;

inline constexpr double kEnergyEps = 1e-6;
inline constexpr double kProbFloor = 1e-12;

struct EnergyWeights {
    double alpha1 = 1.0 / 3.0;  // perspective classifier
    double alpha2 = 1.0 / 3.0;  // anchor
    double alpha3 = 1.0 / 3.0;  // tone

    double total() const { return alpha1 + alpha2 + alpha3; }
    /// Throws unless all weights are finite, nonnegative and not all zero.
    void validate() const;
    /// Drops one component (1, 2 or 3) and rescales the others so the total
    /// is unchanged.
    EnergyWeights without(int component) const;
};

struct EnergyBreakdown {
    Vec5 e_p{};
    Vec5 e_a{};
    Vec5 e_t{};
    Vec5 e_combined{};
    Vec5 p{};
};

/// Which ROUGE-1 field the anchor energy uses.
enum class AnchorScore { F1, Recall, Precision };
AnchorScore parse_anchor_score(std::string_view name);

/// Tone keywords per perspective: the tone-label words followed by the
/// lexicon synonyms, deduplicated in order.
class ToneLexicon {
public:
    /// Tone-label words only.
    ToneLexicon();
    /// Lines "LABEL<TAB>w1,w2,...". Unknown labels or malformed lines throw.
    static ToneLexicon parse(std::istream& in);
    static ToneLexicon load(const std::string& path);
    /// The lexicon shipped with the library.
    static ToneLexicon bundled();
    static std::string bundled_path();

    const std::vector<std::string>& keywords(Perspective p) const { return words_[index_of(p)]; }
    std::vector<std::string> all_words() const;

private:
    PerspectiveArray<std::vector<std::string>> words_;
};

/// Embedder over a vocabulary-indexed table. Reserved and unknown tokens map
/// to the zero vector.
class TableEmbedder final : public metrics::Embedder {
public:
    TableEmbedder(const nn::Vocab& vocab, nn::Tensor table);

    std::size_t dim() const override { return table_.cols(); }
    std::vector<double> embed(std::string_view token) const override;
    const nn::Tensor& table() const { return table_; }

private:
    const nn::Vocab* vocab_;
    nn::Tensor table_;
};

// Hard (token) forms.
Vec5 perspective_energy(const PerspectiveClassifier& clf, std::span<const int> ids);
Vec5 anchor_energy(const metrics::Tokens& summary, AnchorScore score = AnchorScore::F1);
Vec5 tone_energy(const metrics::Tokens& summary, const ToneLexicon& lexicon, const metrics::Embedder& embedder);
Vec5 combine_energy(const EnergyWeights& w, const Vec5& e_p, const Vec5& e_a, const Vec5& e_t);
/// p_i = exp(-1/E_i) / sum_j exp(-1/E_j), with E clamped to >= eps.
Vec5 energy_softmax(const Vec5& e, double eps = kEnergyEps);
/// -log(max(p_y, 1e-12)).
double perspective_loss(const Vec5& p, Perspective y);
double total_loss(double ce, double lp);

/// Everything the energy terms need, prepared once per vocabulary.
class EnergyScorer {
public:
    EnergyScorer(const nn::Vocab& vocab, const PerspectiveClassifier& classifier, const ToneLexicon& lexicon,
                 const TableEmbedder& embedder, EnergyWeights weights, AnchorScore anchor_score = AnchorScore::F1);

    const EnergyWeights& weights() const { return weights_; }
    void set_weights(const EnergyWeights& w);
    const PerspectiveClassifier& classifier() const { return *classifier_; }

    /// Energies of an evaluation-tokenized summary. Tokens outside the
    /// vocabulary reach the classifier as UNK and embed to zero.
    EnergyBreakdown score(const metrics::Tokens& tokens) const;
    /// Energies of decoded ids (special ids are dropped).
    EnergyBreakdown score_ids(std::span<const int> ids) const;
    EnergyBreakdown score_text(std::string_view text) const;

    /// Differentiable energies of soft per-step distributions probs [T x V].
    /// `classifier` holds the (frozen) classifier parameters on the same tape.
    struct Graph {
        nn::Var e_p, e_a, e_t, e, p;  // each [1 x 5]
    };
    Graph soft(const nn::Bound& classifier, nn::Var probs) const;
    /// ℓ_Perspective on the graph.
    static nn::Var loss(const Graph& g, Perspective y);
    static EnergyBreakdown breakdown(const Graph& g);

private:
    const nn::Vocab* vocab_;
    const PerspectiveClassifier* classifier_;
    const ToneLexicon* lexicon_;
    const TableEmbedder* embedder_;
    EnergyWeights weights_;
    AnchorScore anchor_score_;
    PerspectiveArray<std::vector<int>> anchor_ids_;     // distinct anchor ids
    PerspectiveArray<nn::Tensor> anchor_caps_;         // their counts
    PerspectiveArray<std::size_t> anchor_len_{};
    nn::Tensor keyword_dirs_;                          // [d x 5] unit keyword means (zero if none)
};

/// Graph form of energy_softmax on a [1 x 5] row.
nn::Var energy_softmax(nn::Var e, double eps = kEnergyEps);

}  // namespace plasma::energy
