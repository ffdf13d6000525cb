#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "plasma/corpus/perspective.hpp"

namespace plasma::corpus {

inline constexpr std::size_t kMaxAnswers = 10;

/// Half-open code point range inside one answer.
struct SpanAnnotation {
    std::size_t answer_idx = 0;
    std::size_t start = 0;
    std::size_t end = 0;
    Perspective label = Perspective::Information;
    std::string text;  // derived: the covered slice of the answer

    bool operator==(const SpanAnnotation&) const = default;
};

/// One community QA thread with its perspective annotations.
struct Thread {
    std::string id;
    std::string question;
    std::string category;
    std::vector<std::string> answers;
    std::vector<SpanAnnotation> spans;
    std::map<Perspective, std::string> summaries;

    bool operator==(const Thread&) const = default;
};

enum class Severity { Warning, Error };

struct Diagnostic {
    std::size_t line = 0;  // 1-based; 0 when not tied to an input line
    std::string field;     // JSON path, e.g. "spans[0].end"
    std::string message;
    Severity severity = Severity::Error;
};

struct Dataset {
    std::vector<Thread> threads;
    std::vector<Diagnostic> diagnostics;

    std::size_t error_count() const;
    std::size_t warning_count() const;
};

/// Checks every Thread invariant. Errors mean the thread must be rejected;
/// a summary without a supporting span of the same label is only a warning.
std::vector<Diagnostic> validate_thread(const Thread& thread);

/// Parses canonical JSONL. Malformed records become diagnostics and are
/// skipped; the parse itself only throws IoError for an unreadable stream.
Dataset parse_corpus(std::istream& in);
Dataset load_corpus(const std::string& path);

/// Canonical single-line JSON for a thread (no trailing newline).
std::string serialize_thread(const Thread& thread);
void write_corpus(std::ostream& out, const std::vector<Thread>& threads);
void save_corpus(const std::string& path, const std::vector<Thread>& threads);

/// Rebuilds SpanAnnotation::text from the answers. Throws on invalid spans.
void fill_span_text(Thread& thread);

}  // namespace plasma::corpus
