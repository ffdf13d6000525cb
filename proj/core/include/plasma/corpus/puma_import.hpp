#pragma once

#include <istream>
#include <string>

#include "plasma/corpus/thread.hpp"

namespace plasma::corpus {

/// Adapter from the published PUMA release layout to canonical threads.
///
/// Field mapping (the only place it lives):
///   uri                          -> id
///   question                     -> question
///   category (absent: "unknown") -> category
///   answers                      -> answers
///   labelled_answer_spans.LABEL[k].txt
///                                -> span located by exact search in the
///                                   answers (first occurrence, answer order)
///   labelled_summaries.LABEL_SUMMARY -> summaries[LABEL]
/// Accepts a JSON array of records or one record per line. Unlocatable spans
/// and unknown labels become diagnostics; the thread is kept without them.
Dataset import_puma(std::istream& in);
Dataset import_puma_file(const std::string& path);

}  // namespace plasma::corpus
