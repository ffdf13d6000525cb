#include "plasma/energy/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "plasma/prompt/profile.hpp"
#include "plasma/util/error.hpp"

namespace plasma::energy {

void EnergyWeights::validate() const {
    for (double a : {alpha1, alpha2, alpha3})
        if (!std::isfinite(a) || a < 0.0) throw InvalidArgument("energy weights must be finite and nonnegative");
    if (total() <= 0.0) throw InvalidArgument("energy weights must not all be zero");
}

EnergyWeights EnergyWeights::without(int component) const {
    validate();
    EnergyWeights w = *this;
    const double t = total();
    double* slot = component == 1 ? &w.alpha1 : component == 2 ? &w.alpha2 : component == 3 ? &w.alpha3 : nullptr;
    if (!slot) throw InvalidArgument("energy component must be 1, 2 or 3");
    *slot = 0.0;
    const double rest = w.total();
    if (rest <= 0.0) throw InvalidArgument("removing this component leaves no energy term");
    w.alpha1 *= t / rest;
    w.alpha2 *= t / rest;
    w.alpha3 *= t / rest;
    return w;
}

AnchorScore parse_anchor_score(std::string_view name) {
    if (name == "f1") return AnchorScore::F1;
    if (name == "recall") return AnchorScore::Recall;
    if (name == "precision") return AnchorScore::Precision;
    throw InvalidArgument("anchor score must be f1, recall or precision");
}

namespace {

void append_unique(std::vector<std::string>& dst, const std::vector<std::string>& src) {
    for (const auto& w : src)
        if (std::find(dst.begin(), dst.end(), w) == dst.end()) dst.push_back(w);
}

}  // namespace

ToneLexicon::ToneLexicon() {
    for (Perspective p : kAllPerspectives) words_[index_of(p)] = prompt::profile_for(p).tone_keywords;
}

ToneLexicon ToneLexicon::parse(std::istream& in) {
    ToneLexicon lex;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw InvalidArgument("lexicon line " + std::to_string(n) + ": missing tab");
        auto label = parse_label(line.substr(0, tab));
        if (!label) throw InvalidArgument("lexicon line " + std::to_string(n) + ": unknown label");
        std::vector<std::string> words;
        std::stringstream ss(line.substr(tab + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            for (auto& tok : metrics::tokenize_eval(item)) words.push_back(tok);
        }
        append_unique(lex.words_[index_of(*label)], words);
    }
    return lex;
}

ToneLexicon ToneLexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read lexicon " + path);
    return parse(in);
}

std::string ToneLexicon::bundled_path() {
    namespace fs = std::filesystem;
    if (const char* env = std::getenv("PLASMA_DATA_DIR")) {
        fs::path p = fs::path(env) / "tone_lexicon.tsv";
        if (fs::exists(p)) return p.string();
    }
    for (const char* dir : {PLASMA_DATA_DIR, PLASMA_INSTALL_DATA_DIR}) {
        fs::path p = fs::path(dir) / "tone_lexicon.tsv";
        if (fs::exists(p)) return p.string();
    }
    throw IoError("bundled tone lexicon not found; set PLASMA_DATA_DIR");
}

ToneLexicon ToneLexicon::bundled() { return load(bundled_path()); }

std::vector<std::string> ToneLexicon::all_words() const {
    std::vector<std::string> out;
    for (const auto& w : words_) append_unique(out, w);
    return out;
}

TableEmbedder::TableEmbedder(const nn::Vocab& vocab, nn::Tensor table) : vocab_(&vocab), table_(std::move(table)) {
    if (table_.rank() != 2 || table_.rows() != vocab.size())
        throw InvalidArgument("embedding table rows must match the vocabulary size");
    for (std::size_t r = 0; r < static_cast<std::size_t>(nn::kReservedCount); ++r)
        for (auto& x : table_.row_view(r)) x = 0.0;
}

std::vector<double> TableEmbedder::embed(std::string_view token) const {
    const int id = vocab_->id(token);
    auto row = table_.row_view(static_cast<std::size_t>(id));
    return {row.begin(), row.end()};
}

Vec5 perspective_energy(const PerspectiveClassifier& clf, std::span<const int> ids) { return clf.predict(ids); }

Vec5 anchor_energy(const metrics::Tokens& summary, AnchorScore score) {
    Vec5 e{};
    for (Perspective p : kAllPerspectives) {
        const auto& anchor = prompt::anchor_tokens(p);
        metrics::Tokens head(summary.begin(), summary.begin() + static_cast<std::ptrdiff_t>(std::min(anchor.size(), summary.size())));
        auto r = metrics::rouge_n(head, anchor, 1);
        e[index_of(p)] = score == AnchorScore::F1 ? r.f1 : score == AnchorScore::Recall ? r.recall : r.precision;
    }
    return e;
}

namespace {

std::vector<double> mean_embedding(const metrics::Tokens& tokens, const metrics::Embedder& emb) {
    std::vector<double> m(emb.dim(), 0.0);
    if (tokens.empty()) return m;
    for (const auto& t : tokens) {
        auto v = emb.embed(t);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += v[i];
    }
    for (auto& x : m) x /= static_cast<double>(tokens.size());
    return m;
}

}  // namespace

Vec5 tone_energy(const metrics::Tokens& summary, const ToneLexicon& lexicon, const metrics::Embedder& embedder) {
    Vec5 e{};
    const auto s = mean_embedding(summary, embedder);
    for (Perspective p : kAllPerspectives) {
        const auto k = mean_embedding(lexicon.keywords(p), embedder);
        e[index_of(p)] = std::max(0.0, metrics::cosine(s, k));
    }
    return e;
}

Vec5 combine_energy(const EnergyWeights& w, const Vec5& e_p, const Vec5& e_a, const Vec5& e_t) {
    Vec5 e{};
    for (std::size_t i = 0; i < kNumPerspectives; ++i) e[i] = w.alpha1 * e_p[i] + w.alpha2 * e_a[i] + w.alpha3 * e_t[i];
    return e;
}

Vec5 energy_softmax(const Vec5& e, double eps) {
    Vec5 s{};
    for (std::size_t i = 0; i < kNumPerspectives; ++i) s[i] = -1.0 / std::max(e[i], eps);
    const double mx = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (auto& x : s) z += (x = std::exp(x - mx));
    for (auto& x : s) x /= z;
    return s;
}

double perspective_loss(const Vec5& p, Perspective y) { return -std::log(std::max(p[index_of(y)], kProbFloor)); }

double total_loss(double ce, double lp) {
    if (!std::isfinite(ce) || !std::isfinite(lp)) throw NumericError("non-finite loss term");
    return ce + lp;
}

EnergyScorer::EnergyScorer(const nn::Vocab& vocab, const PerspectiveClassifier& classifier, const ToneLexicon& lexicon,
                           const TableEmbedder& embedder, EnergyWeights weights, AnchorScore anchor_score)
    : vocab_(&vocab),
      classifier_(&classifier),
      lexicon_(&lexicon),
      embedder_(&embedder),
      weights_(weights),
      anchor_score_(anchor_score) {
    weights_.validate();
    if (classifier.vocab_size() != vocab.size()) throw InvalidArgument("classifier vocabulary size mismatch");
    const std::size_t d = embedder.dim();
    keyword_dirs_ = nn::Tensor::matrix(d, kNumPerspectives);
    for (Perspective p : kAllPerspectives) {
        const std::size_t i = index_of(p);
        std::map<int, double> counts;
        for (const auto& tok : prompt::anchor_tokens(p)) {
            if (!vocab.contains(tok)) throw InvalidArgument("anchor token '" + tok + "' missing from vocabulary");
            counts[vocab.id(tok)] += 1.0;
        }
        anchor_len_[i] = prompt::anchor_tokens(p).size();
        std::vector<double> caps;
        for (auto [id, c] : counts) {
            anchor_ids_[i].push_back(id);
            caps.push_back(c);
        }
        anchor_caps_[i] = nn::Tensor::row(std::move(caps));

        auto k = mean_embedding(lexicon.keywords(p), embedder);
        double norm = 0.0;
        for (double x : k) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (std::size_t r = 0; r < d; ++r) keyword_dirs_(r, i) = k[r] / norm;
    }
}

void EnergyScorer::set_weights(const EnergyWeights& w) {
    w.validate();
    weights_ = w;
}

EnergyBreakdown EnergyScorer::score(const metrics::Tokens& tokens) const {
    EnergyBreakdown b;
    b.e_p = tokens.empty() ? Vec5{} : perspective_energy(*classifier_, vocab_->encode(tokens));
    b.e_a = anchor_energy(tokens, anchor_score_);
    b.e_t = tone_energy(tokens, *lexicon_, *embedder_);
    b.e_combined = combine_energy(weights_, b.e_p, b.e_a, b.e_t);
    b.p = energy_softmax(b.e_combined);
    return b;
}

EnergyBreakdown EnergyScorer::score_ids(std::span<const int> ids) const { return score(vocab_->decode(ids)); }

EnergyBreakdown EnergyScorer::score_text(std::string_view text) const { return score(metrics::tokenize_eval(text)); }

nn::Var energy_softmax(nn::Var e, double eps) {
    return nn::softmax_rows(nn::scale(nn::reciprocal(nn::clamp_min(e, eps)), -1.0));
}

EnergyScorer::Graph EnergyScorer::soft(const nn::Bound& classifier, nn::Var probs) const {
    const std::size_t T = probs.value().rows();
    if (T == 0) throw InvalidArgument("soft energies need at least one decoding step");
    if (probs.value().cols() != vocab_->size()) throw InvalidArgument("soft distribution width does not match vocab");
    nn::Tape& tape = probs.tape();
    Graph g;
    g.e_p = classifier_->forward_soft(classifier, probs);

    std::vector<nn::Var> anchors;
    for (std::size_t i = 0; i < kNumPerspectives; ++i) {
        const std::size_t j = anchor_len_[i];
        const std::size_t L = std::min(j, T);
        nn::Var counts = nn::sum_rows(nn::slice_rows(probs, 0, L));
        nn::Var overlap = nn::sum_all(nn::min_const(nn::gather_cols(counts, anchor_ids_[i]), anchor_caps_[i]));
        double denom = 0.0, mult = 1.0;
        switch (anchor_score_) {
            case AnchorScore::F1: denom = static_cast<double>(j + L); mult = 2.0; break;
            case AnchorScore::Recall: denom = static_cast<double>(j); break;
            case AnchorScore::Precision: denom = static_cast<double>(L); break;
        }
        anchors.push_back(nn::scale(overlap, mult / denom));
    }
    g.e_a = nn::concat_cols(anchors);

    nn::Var table = tape.constant(embedder_->table());
    nn::Var mean = nn::mean_rows(nn::matmul(probs, table));
    g.e_t = nn::clamp_min(nn::matmul(nn::l2_normalize_rows(mean), tape.constant(keyword_dirs_)), 0.0);

    g.e = nn::add(nn::add(nn::scale(g.e_p, weights_.alpha1), nn::scale(g.e_a, weights_.alpha2)),
                  nn::scale(g.e_t, weights_.alpha3));
    g.p = energy_softmax(g.e);
    return g;
}

nn::Var EnergyScorer::loss(const Graph& g, Perspective y) {
    return nn::scale(nn::log(nn::clamp_min(nn::pick(g.p, 0, index_of(y)), kProbFloor)), -1.0);
}

EnergyBreakdown EnergyScorer::breakdown(const Graph& g) {
    EnergyBreakdown b;
    for (std::size_t i = 0; i < kNumPerspectives; ++i) {
        b.e_p[i] = g.e_p.value()[i];
        b.e_a[i] = g.e_a.value()[i];
        b.e_t[i] = g.e_t.value()[i];
        b.e_combined[i] = g.e.value()[i];
        b.p[i] = g.p.value()[i];
    }
    return b;
}

}  // namespace plasma::energy
