#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "plasma/corpus/thread.hpp"

namespace plasma::prompt {

enum class Placement { Before, After };

/// Which constraint sections are rendered: (P)erspective task line,
/// (D)efinition, (B)egin-summary-with anchor, (T)one.
struct PromptParts {
    bool task = true;
    bool definition = true;
    bool begin_with = true;
    bool tone = true;

    bool operator==(const PromptParts&) const = default;

    static PromptParts all() { return {}; }
    static PromptParts none() { return {false, false, false, false}; }
    /// Accepts "P,D,B,T", "P+D+T", "full"/"all". Throws on unknown letters.
    static PromptParts parse(std::string_view spec);
    /// Canonical "P+D+B+T"-style name ("none" when empty).
    std::string name() const;
};

struct PromptSpec {
    const corpus::Thread* thread = nullptr;
    Perspective perspective = Perspective::Information;
    Placement placement = Placement::Before;
    PromptParts parts;
};

enum class SectionKind { Task, Definition, BeginWith, Tone, Question, Content };

struct PromptSection {
    SectionKind kind;
    std::string body;

    bool operator==(const PromptSection&) const = default;
};

std::string_view section_header(SectionKind kind);

/// Renders the labeled-section template. Constraint sections precede
/// QUESTION/CONTENT with Placement::Before and follow them with
/// Placement::After. Throws InvalidArgument for a thread without answers.
std::string build_prompt(const PromptSpec& spec);

/// Inverse of build_prompt at the section level.
std::vector<PromptSection> parse_prompt(std::string_view text);

inline constexpr std::string_view kAnswerSeparator = " ||| ";

/// Task line body, e.g. "Summarize the following content according to
/// perspective: SUGGESTION".
std::string task_line(Perspective p);

}  // namespace plasma::prompt
