#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "plasma/corpus/thread.hpp"

namespace plasma::corpus {

/// Generator settings for the separable synthetic corpus.
struct SynthConfig {
    std::size_t threads = 100;
    /// Keyword vocabulary per perspective; must be pairwise disjoint and
    /// disjoint from `filler`.
    PerspectiveArray<std::vector<std::string>> vocab;
    std::vector<std::string> filler;
    std::vector<std::string> topics;
    std::vector<std::string> categories;
    std::size_t min_answers = 1, max_answers = 3;
    std::size_t min_spans = 2, max_spans = 5;
    std::size_t min_labels = 2, max_labels = 4;
    std::size_t min_span_words = 3, max_span_words = 5;
    std::size_t summary_words = 4;
    double filler_probability = 0.5;

    /// Bundled vocabularies, topics and the 17 health categories.
    static SynthConfig defaults(std::size_t threads);
};

/// Throws InvalidArgument when vocabularies overlap or are empty.
void check_vocabularies(const SynthConfig& config);

/// Deterministic per (config, seed). Every span of label i uses only words of
/// vocab[i]; every summary starts with the anchor text of its label followed
/// by words taken from that label's spans.
Dataset synthesize_corpus(const SynthConfig& config, std::uint64_t seed);

}  // namespace plasma::corpus
