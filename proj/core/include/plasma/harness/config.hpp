#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "plasma/corpus/stats.hpp"
#include "plasma/energy/classifier.hpp"
#include "plasma/energy/energy.hpp"
#include "plasma/nn/transformer.hpp"
#include "plasma/prompt/template.hpp"

namespace plasma::harness {

/// How ℓ_Perspective sees the summarizer's output distributions.
enum class LpMode { FreeRun, TeacherForced };

struct OptimConfig {
    double lr = 1e-3;
    std::size_t epochs = 5;
    std::size_t batch_size = 8;
    double clip_norm = 1.0;
    std::uint64_t seed = 1;
};

struct RunConfig {
    // Data. An empty corpus path means "synthesize".
    std::string corpus;
    std::size_t synth_threads = 500;
    std::uint64_t synth_seed = 1;
    std::string splits;  // split file; empty means split by ratios/seed
    corpus::SplitRatios split_ratios;
    std::uint64_t split_seed = 7;

    // Model.
    std::size_t vocab_max = 8000;
    nn::ModelConfig model;
    std::size_t max_src_len = 256;
    std::size_t prefix_len = 16;
    double prefix_init = 0.05;

    // Prompt.
    prompt::PromptParts parts;
    prompt::Placement placement = prompt::Placement::Before;

    // Energy.
    energy::EnergyWeights weights;
    energy::AnchorScore anchor_score = energy::AnchorScore::F1;
    LpMode lp_mode = LpMode::FreeRun;
    bool use_lp = true;
    std::string lexicon;  // empty means the bundled lexicon
    energy::ClassifierConfig classifier;
    std::uint64_t classifier_seed = 1;

    // Optimization.
    OptimConfig pretrain{1e-3, 12, 8, 1.0, 1};
    /// Base pretraining source text: "content" (question and answers only)
    /// or "prompt" (the configured prompt, constraint sections included).
    std::string pretrain_input = "content";
    /// Base pretraining target: "summary" (gold summary) or "body" (gold
    /// summary without its leading anchor phrase).
    std::string pretrain_target = "body";
    OptimConfig train{3e-3, 2, 8, 1.0, 1};

    // Decoding.
    std::size_t decode_max_len = 24;
    bool decode_sample = false;
    double decode_temperature = 1.0;
    std::uint64_t decode_seed = 0;

    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string output_dir = "plasma_run";

    /// Parses a JSON document; missing fields keep their defaults, unknown
    /// fields are rejected. Relative paths resolve against `base_dir`.
    static RunConfig from_json(std::string_view text, const std::string& base_dir = "");
    static RunConfig load(const std::string& path);
    /// Every field, defaults included.
    std::string to_json() const;
    /// Throws InvalidArgument on inconsistent settings or missing files.
    void validate() const;
};

/// One ablation setting. Composite ids join settings with '/', e.g.
/// "no_lp/prompt:P+D+T".
struct Variant {
    std::string id;

    /// Throws InvalidArgument for unknown ids.
    static Variant parse(std::string_view id);
    /// Applies the variant to a base configuration.
    RunConfig apply(const RunConfig& base) const;
    /// Canonical single-setting ids.
    static const std::vector<std::string>& known();
};

/// Comma-separated variant list.
std::vector<Variant> parse_matrix(std::string_view spec);
/// Comma-separated seed list.
std::vector<std::uint64_t> parse_seeds(std::string_view spec);

}  // namespace plasma::harness
