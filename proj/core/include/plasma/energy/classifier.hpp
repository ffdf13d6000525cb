#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plasma/corpus/perspective.hpp"
#include "plasma/nn/params.hpp"
#include "plasma/nn/vocab.hpp"

namespace plasma::energy {

struct LabeledText {
    std::string text;
    Perspective label;
};

struct ClassifierConfig {
    std::size_t dim = 32;
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    double lr = 0.02;
    double init_scale = 0.1;
};

/// Mean-pooled token embeddings followed by a linear layer and a softmax over
/// the five perspectives. Token ids come from the summarizer vocabulary.
class PerspectiveClassifier {
public:
    PerspectiveClassifier() = default;
    /// init_scale 0 gives all-zero parameters, i.e. a uniform output.
    PerspectiveClassifier(std::size_t vocab_size, std::size_t dim, double init_scale, std::uint64_t seed);
    explicit PerspectiveClassifier(nn::ParamSet params);

    const nn::ParamSet& params() const { return params_; }
    nn::ParamSet& params() { return params_; }
    std::size_t vocab_size() const;

    /// Distribution over perspectives for hard token ids. Throws on empty input.
    PerspectiveArray<double> predict(std::span<const int> ids) const;
    Perspective classify(std::span<const int> ids) const;

    /// Graph forms. `probs` is a [T x V] matrix of per-step token
    /// distributions; both return a [1 x 5] probability row.
    nn::Var forward_ids(const nn::Bound& bound, std::span<const int> ids) const;
    nn::Var forward_soft(const nn::Bound& bound, nn::Var probs) const;

private:
    nn::Var head(const nn::Bound& bound, nn::Var pooled) const;
    nn::ParamSet params_;
};

/// Trains with cross-entropy and Adam; deterministic per seed. Throws when a
/// perspective has no example.
PerspectiveClassifier train_classifier(std::span<const LabeledText> data, const nn::Vocab& vocab,
                                       const ClassifierConfig& config, std::uint64_t seed);

/// Fraction of examples whose argmax matches the label. Examples that
/// tokenize to nothing count as wrong.
double classifier_accuracy(const PerspectiveClassifier& clf, std::span<const LabeledText> data,
                           const nn::Vocab& vocab);

}  // namespace plasma::energy
