#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "plasma/corpus/perspective.hpp"
#include "plasma/metrics/tokenize.hpp"

namespace plasma::prompt {

/// Per-perspective prompt conditions.
struct PerspectiveProfile {
    Perspective label;
    std::string_view definition;
    std::string_view anchor_text;  // lowercase, no trailing ellipsis
    std::string_view tone_label;
    std::vector<std::string> tone_keywords;  // evaluation tokens of tone_label
};

const PerspectiveProfile& profile_for(Perspective label);

/// Evaluation tokens of the anchor text; its length is the anchor window j.
const metrics::Tokens& anchor_tokens(Perspective label);

/// True when `tokens` starts with the anchor tokens of `label`.
bool starts_with_anchor(const metrics::Tokens& tokens, Perspective label);

}  // namespace plasma::prompt
