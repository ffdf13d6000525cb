#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "plasma/corpus/stats.hpp"
#include "plasma/energy/classifier.hpp"
#include "plasma/energy/energy.hpp"
#include "plasma/harness/config.hpp"
#include "plasma/metrics/scores.hpp"
#include "plasma/nn/transformer.hpp"
#include "plasma/nn/vocab.hpp"

namespace plasma::harness {

/// One (thread, gold perspective) training or evaluation instance.
struct Example {
    const corpus::Thread* thread = nullptr;
    Perspective perspective = Perspective::Information;
    std::vector<int> src;
    std::vector<int> tgt;  // gold summary ids, no BOS/EOS
};

struct PromptSettings {
    prompt::PromptParts parts;
    prompt::Placement placement = prompt::Placement::Before;
    std::size_t max_src_len = 256;
};

/// Prompt ids, truncated to max_src_len.
std::vector<int> encode_prompt(const nn::Vocab& vocab, const corpus::Thread& thread, Perspective p,
                               const PromptSettings& settings);
/// One example per gold summary, in (thread, perspective) order. Summaries
/// that tokenize to nothing are skipped.
std::vector<Example> make_examples(const std::vector<corpus::Thread>& threads, const nn::Vocab& vocab,
                                   const PromptSettings& settings);

/// Labeled span texts for the perspective classifier.
std::vector<energy::LabeledText> span_examples(const std::vector<corpus::Thread>& threads);

/// Vocabulary over training prompts and summaries, the prompt constraint
/// texts and the tone lexicon.
nn::Vocab build_run_vocab(const std::vector<corpus::Thread>& train, const energy::ToneLexicon& lexicon,
                          std::size_t max_size);

struct DataBundle {
    std::vector<corpus::Thread> threads;
    corpus::SplitAssignment splits;
    std::vector<corpus::Thread> train, val, test;
    std::size_t rejected = 0;

    const std::vector<corpus::Thread>& split(std::string_view name) const;
};

/// Loads or synthesizes the corpus and applies the split file or ratios.
DataBundle load_data(const RunConfig& config);

// ---------------------------------------------------------------------------
// Training

struct PretrainResult {
    nn::ModelParams model;
    double initial_ce = 0.0;         // first batch
    std::vector<double> epoch_ce;    // mean per epoch
    std::uint64_t hash = 0;
};

/// Trains every base parameter on (source -> gold summary) with ℓ_CE only.
/// Throws InvalidArgument for an empty training set and NumericError on
/// divergence. Writes {"epoch": e, "ce": x} lines to `log` when given.
PretrainResult pretrain_base(const RunConfig& config, const std::vector<Example>& train, std::size_t vocab_size,
                             std::uint64_t seed, std::ostream* log = nullptr);

struct StepLog {
    std::size_t step = 0;
    double ce = 0.0;
    double lp = 0.0;
    energy::Vec5 e{};
    energy::Vec5 p{};

    std::string to_json() const;
};

struct TrainResult {
    nn::PrefixParams prefix;
    std::vector<StepLog> steps;
    std::uint64_t base_hash_before = 0;
    std::uint64_t base_hash_after = 0;
};

/// Prefix tuning with L = ℓ_CE + ℓ_Perspective (ℓ_CE only when
/// config.use_lp is false, in which case lp is logged as 0). Throws
/// InvalidArgument when the base hash differs from `expected_base_hash`.
TrainResult train_prefix(const RunConfig& config, const nn::ModelParams& base, std::uint64_t expected_base_hash,
                         const energy::EnergyScorer& scorer, const std::vector<Example>& train, std::uint64_t seed,
                         std::ostream* log = nullptr);

// ---------------------------------------------------------------------------
// Evaluation

struct EvalRow {
    std::string scope;  // perspective label or "OVERALL"
    std::size_t count = 0;
    metrics::MetricReport metrics;
    double classifier_accuracy = 0.0;  // generated summary classified as the target perspective
    double anchor_hit_rate = 0.0;      // generated summary starts with the anchor tokens
    double anchor_energy = 0.0;        // E_a of the target perspective
};

struct Generation {
    std::string thread_id;
    Perspective perspective;
    std::string text;
};

struct EvalReport {
    std::vector<EvalRow> rows;  // per perspective present, then OVERALL
    std::size_t evaluated_threads = 0;
    std::size_t skipped_threads = 0;
    std::vector<Generation> generations;

    const EvalRow* row(std::string_view scope) const;
};

/// Maps an example to generated token ids.
using Generator = std::function<std::vector<int>(const Example&)>;

struct EvalContext {
    const nn::Vocab* vocab = nullptr;
    const energy::PerspectiveClassifier* classifier = nullptr;
    const metrics::Embedder* embedder = nullptr;
    PromptSettings prompt;
};

EvalReport evaluate(const std::vector<corpus::Thread>& split, const Generator& generate, const EvalContext& ctx);

/// Greedy (or sampled, per config) generator over base + optional prefix.
Generator model_generator(const RunConfig& config, const nn::ModelParams& base, const nn::PrefixParams* prefix);

std::string report_json(const EvalReport& report, const std::string& label);
std::string render_report(const EvalReport& report);

// ---------------------------------------------------------------------------
// Experiment state

/// Shared artifacts of a run directory: corpus, vocab, classifier, frozen base.
struct Experiment {
    RunConfig config;
    DataBundle data;
    nn::Vocab vocab;
    energy::ToneLexicon lexicon;
    energy::PerspectiveClassifier classifier;
    nn::ModelParams base;
    std::uint64_t base_hash = 0;
    double classifier_val_accuracy = 0.0;

    PromptSettings prompt_settings() const { return {config.parts, config.placement, config.max_src_len}; }
    /// Embedding table of the perspective classifier, used for tone energy and embedding similarity.
    energy::TableEmbedder embedder() const;
};

/// Builds the vocabulary, trains the classifier and pretrains the base, then
/// writes vocab.txt, classifier.ckpt, base.ckpt, base.hash, pretrain_log.jsonl
/// and resolved_config.json into config.output_dir.
Experiment pretrain_experiment(const RunConfig& config, std::ostream* progress = nullptr);

/// Loads the artifacts written by pretrain_experiment; the base hash must
/// match base.hash.
Experiment load_experiment(const RunConfig& config);

/// Loads when the artifacts exist, otherwise pretrains.
Experiment open_experiment(const RunConfig& config, std::ostream* progress = nullptr);

struct VariantRun {
    std::string variant;
    std::uint64_t seed = 0;
    EvalReport report;
    TrainResult training;
};

/// Trains the prefix for one variant and seed. Writes prefix and energy log
/// files into the output directory when `save` is set.
VariantRun run_variant(const Experiment& exp, const Variant& variant, std::uint64_t seed, std::string_view split,
                       bool save = true);

struct Aggregate {
    double mean = 0.0, min = 0.0, max = 0.0;
};

struct AblationRow {
    std::string variant;
    std::size_t runs = 0;
    std::map<std::string, Aggregate> values;  // metric name -> aggregate over seeds
};

struct AblationResult {
    std::vector<VariantRun> runs;
    std::vector<AblationRow> rows;
};

/// One run per (variant, seed), evaluated on `split`, aggregated per variant.
AblationResult run_ablation(const Experiment& exp, const std::vector<Variant>& matrix,
                            const std::vector<std::uint64_t>& seeds, std::string_view split,
                            std::ostream* progress = nullptr);

std::string ablation_json(const AblationResult& result);
std::string render_ablation(const AblationResult& result);

// ---------------------------------------------------------------------------
// Reranking

struct Candidate {
    std::string thread_id;
    std::optional<Perspective> perspective;
    std::string text;
};

struct RankedCandidate {
    Candidate candidate;
    std::size_t index = 0;  // position in the input
    energy::EnergyBreakdown energy;
    double score = 0.0;     // combined energy of the requested perspective
};

struct RerankResult {
    std::vector<RankedCandidate> ranked;
    std::vector<corpus::Diagnostic> diagnostics;
};

/// Scores JSONL candidates {"thread_id","perspective","text"} by the combined
/// energy of `target`, sorted descending with ties kept in input order.
/// Unknown thread ids (when `known_ids` is nonempty) and malformed lines
/// become diagnostics.
RerankResult rerank(std::istream& candidates, Perspective target, const energy::EnergyScorer& scorer,
                    const std::set<std::string>& known_ids);

std::string rerank_jsonl(const RerankResult& result);

}  // namespace plasma::harness
