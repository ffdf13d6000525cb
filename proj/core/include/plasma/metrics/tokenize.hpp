#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace plasma::metrics {

/// Lowercased evaluation tokens. Only tokenize_eval() produces these.
using Tokens = std::vector<std::string>;

struct TokenSpan {
    std::string text;
    std::size_t start = 0;  // code point offset, inclusive
    std::size_t end = 0;    // code point offset, exclusive
};

/// Evaluation tokenizer shared by the metrics, the energy terms and the model
/// vocabulary.
///
/// Rules: ASCII is lowercased; whitespace separates tokens; a word is a run of
/// ASCII alphanumerics or non-ASCII code points, where an apostrophe or hyphen
/// between two word characters stays inside the word ("user's"); every other
/// punctuation character is its own token, except that a run of '.' forms one
/// token and runs longer than one ("...") are dropped.
Tokens tokenize_eval(std::string_view text);

/// Same tokenization, with code point offsets into the original text.
std::vector<TokenSpan> tokenize_with_offsets(std::string_view text);

/// Joins tokens with single spaces.
std::string detokenize(const Tokens& tokens);

}  // namespace plasma::metrics
