#include "plasma/energy/classifier.hpp"

#include <algorithm>
#include <numeric>

#include "plasma/nn/optim.hpp"
#include "plasma/util/error.hpp"
#include "plasma/util/rng.hpp"

namespace plasma::energy {

PerspectiveClassifier::PerspectiveClassifier(std::size_t vocab_size, std::size_t dim, double init_scale,
                                             std::uint64_t seed) {
    if (vocab_size == 0 || dim == 0) throw InvalidArgument("classifier dimensions must be positive");
    Rng rng(seed);
    nn::Tensor emb = nn::Tensor::matrix(vocab_size, dim);
    nn::Tensor w = nn::Tensor::matrix(dim, kNumPerspectives);
    if (init_scale != 0.0) {
        for (auto& x : emb.values()) x = rng.normal(0.0, init_scale);
        for (auto& x : w.values()) x = rng.normal(0.0, init_scale);
    }
    params_.add("cls.embed", std::move(emb));
    params_.add("cls.w", std::move(w));
    params_.add("cls.b", nn::Tensor::matrix(1, kNumPerspectives));
}

PerspectiveClassifier::PerspectiveClassifier(nn::ParamSet params) : params_(std::move(params)) {
    const auto& e = params_.get("cls.embed");
    const auto& w = params_.get("cls.w");
    const auto& b = params_.get("cls.b");
    if (e.rank() != 2 || w.rank() != 2 || w.rows() != e.cols() || w.cols() != kNumPerspectives ||
        b.size() != kNumPerspectives)
        throw InvalidArgument("classifier parameter shapes are inconsistent");
}

std::size_t PerspectiveClassifier::vocab_size() const { return params_.get("cls.embed").rows(); }

nn::Var PerspectiveClassifier::head(const nn::Bound& bound, nn::Var pooled) const {
    return nn::softmax_rows(nn::add_row(nn::matmul(pooled, bound["cls.w"]), bound["cls.b"]));
}

nn::Var PerspectiveClassifier::forward_ids(const nn::Bound& bound, std::span<const int> ids) const {
    if (ids.empty()) throw InvalidArgument("cannot classify an empty summary");
    return head(bound, nn::mean_rows(nn::embedding(bound["cls.embed"], ids)));
}

nn::Var PerspectiveClassifier::forward_soft(const nn::Bound& bound, nn::Var probs) const {
    if (probs.value().rows() == 0) throw InvalidArgument("cannot classify an empty summary");
    if (probs.value().cols() != vocab_size()) throw InvalidArgument("soft summary width does not match classifier vocab");
    return head(bound, nn::mean_rows(nn::matmul(probs, bound["cls.embed"])));
}

PerspectiveArray<double> PerspectiveClassifier::predict(std::span<const int> ids) const {
    nn::Tape tape;
    nn::Bound bound(tape, params_, nn::TrainMask{});
    auto out = forward_ids(bound, ids).value();
    PerspectiveArray<double> p{};
    for (std::size_t i = 0; i < kNumPerspectives; ++i) p[i] = out[i];
    return p;
}

Perspective PerspectiveClassifier::classify(std::span<const int> ids) const {
    auto p = predict(ids);
    return perspective_at(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()));
}

PerspectiveClassifier train_classifier(std::span<const LabeledText> data, const nn::Vocab& vocab,
                                       const ClassifierConfig& config, std::uint64_t seed) {
    PerspectiveArray<std::size_t> seen{};
    std::vector<std::vector<int>> ids;
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ids.push_back(vocab.encode_text(data[i].text));
        if (ids.back().empty()) continue;
        ++seen[index_of(data[i].label)];
        usable.push_back(i);
    }
    for (std::size_t k = 0; k < kNumPerspectives; ++k)
        if (seen[k] == 0)
            throw InvalidArgument("no training span for perspective " + std::string(label_name(perspective_at(k))));
    if (config.batch_size == 0) throw InvalidArgument("classifier batch size must be positive");

    PerspectiveClassifier clf(vocab.size(), config.dim, config.init_scale, seed);
    nn::TrainMask mask = nn::TrainMask::all_of(clf.params());
    nn::Adam adam(clf.params(), mask, {.lr = config.lr});
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order = usable;
        rng.shuffle(order.begin(), order.end());
        for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
            const std::size_t e = std::min(order.size(), b + config.batch_size);
            nn::Tape tape;
            nn::Bound bound(tape, clf.params(), mask);
            nn::Var loss;
            for (std::size_t k = b; k < e; ++k) {
                const std::size_t i = order[k];
                nn::Var p = clf.forward_ids(bound, ids[i]);
                nn::Var nll = nn::scale(nn::log(nn::clamp_min(nn::pick(p, 0, index_of(data[i].label)), 1e-12)), -1.0);
                loss = loss.valid() ? nn::add(loss, nll) : nll;
            }
            loss = nn::scale(loss, 1.0 / static_cast<double>(e - b));
            tape.backward(loss);
            adam.step(clf.params(), bound.gradients(clf.params(), mask));
        }
    }
    return clf;
}

double classifier_accuracy(const PerspectiveClassifier& clf, std::span<const LabeledText> data,
                           const nn::Vocab& vocab) {
    if (data.empty()) return 0.0;
    std::size_t hit = 0;
    for (const auto& ex : data) {
        auto ids = vocab.encode_text(ex.text);
        if (!ids.empty() && clf.classify(ids) == ex.label) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(data.size());
}

}  // namespace plasma::energy
