#include "plasma/corpus/thread.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "plasma/util/error.hpp"
#include "plasma/util/utf8.hpp"

namespace plasma::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t Dataset::error_count() const {
    return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(),
                                                  [](const Diagnostic& d) { return d.severity == Severity::Error; }));
}

std::size_t Dataset::warning_count() const { return diagnostics.size() - error_count(); }

namespace {

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); });
}

std::string span_path(std::size_t i, const char* field) {
    return "spans[" + std::to_string(i) + "]" + (field[0] ? std::string(".") + field : std::string());
}

}  // namespace

std::vector<Diagnostic> validate_thread(const Thread& t) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string field, std::string msg) {
        out.push_back({0, std::move(field), std::move(msg), Severity::Error});
    };
    if (t.id.empty()) error("id", "empty thread id");
    if (blank(t.question)) error("question", "empty question text");
    if (t.answers.empty() || t.answers.size() > kMaxAnswers)
        error("answers", "answer count must be in [1, " + std::to_string(kMaxAnswers) + "], got " +
                             std::to_string(t.answers.size()));
    for (std::size_t i = 0; i < t.answers.size(); ++i)
        if (blank(t.answers[i])) error("answers[" + std::to_string(i) + "]", "empty answer text");

    for (std::size_t i = 0; i < t.spans.size(); ++i) {
        const auto& s = t.spans[i];
        if (s.answer_idx >= t.answers.size()) {
            error(span_path(i, "answer_idx"), "answer index " + std::to_string(s.answer_idx) + " out of range");
            continue;
        }
        const std::size_t len = utf8::length(t.answers[s.answer_idx]);
        if (s.end > len) {
            error(span_path(i, "end"), "span end " + std::to_string(s.end) + " exceeds answer length " +
                                           std::to_string(len));
            continue;
        }
        if (s.start >= s.end) {
            error(span_path(i, "start"), "span start must be < end");
            continue;
        }
        if (utf8::slice(t.answers[s.answer_idx], s.start, s.end) != s.text)
            error(span_path(i, "text"), "span text does not match the answer slice");
    }

    for (const auto& [label, text] : t.summaries) {
        const std::string field = "summaries." + std::string(label_name(label));
        if (blank(text)) error(field, "empty summary text");
        const bool supported =
            std::any_of(t.spans.begin(), t.spans.end(), [&](const SpanAnnotation& s) { return s.label == label; });
        if (!supported)
            out.push_back({0, field, "summary has no supporting span with the same label", Severity::Warning});
    }
    return out;
}

void fill_span_text(Thread& t) {
    for (std::size_t i = 0; i < t.spans.size(); ++i) {
        auto& s = t.spans[i];
        if (s.answer_idx >= t.answers.size())
            throw InvalidArgument("thread " + t.id + ": " + span_path(i, "answer_idx") + " out of range");
        const std::size_t len = utf8::length(t.answers[s.answer_idx]);
        if (s.start >= s.end || s.end > len)
            throw InvalidArgument("thread " + t.id + ": " + span_path(i, "") + " has an invalid range");
        s.text = utf8::slice(t.answers[s.answer_idx], s.start, s.end);
    }
}

namespace {

struct RecordParser {
    std::size_t line;
    std::vector<Diagnostic>& diags;
    bool ok = true;

    void fail(std::string field, std::string msg) {
        diags.push_back({line, std::move(field), std::move(msg), Severity::Error});
        ok = false;
    }

    const json* member(const json& obj, const char* key, std::string path) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            fail(std::move(path), "missing field");
            return nullptr;
        }
        return &*it;
    }

    bool get_string(const json& obj, const char* key, const std::string& path, std::string& out) {
        const json* v = member(obj, key, path);
        if (!v) return false;
        if (!v->is_string()) {
            fail(path, "expected a string");
            return false;
        }
        out = v->get<std::string>();
        return true;
    }

    bool get_index(const json& obj, const char* key, const std::string& path, std::size_t& out) {
        const json* v = member(obj, key, path);
        if (!v) return false;
        if (v->is_number_unsigned()) {
            out = v->get<std::size_t>();
            return true;
        }
        if (v->is_number_integer() && v->get<long long>() >= 0) {
            out = static_cast<std::size_t>(v->get<long long>());
            return true;
        }
        fail(path, "expected a non-negative integer");
        return false;
    }

    std::optional<Thread> parse(const json& rec) {
        if (!rec.is_object()) {
            fail("", "record is not a JSON object");
            return std::nullopt;
        }
        Thread t;
        get_string(rec, "id", "id", t.id);
        get_string(rec, "question", "question", t.question);
        get_string(rec, "category", "category", t.category);

        if (const json* answers = member(rec, "answers", "answers")) {
            if (!answers->is_array()) {
                fail("answers", "expected an array of strings");
            } else {
                for (std::size_t i = 0; i < answers->size(); ++i) {
                    const auto& a = (*answers)[i];
                    if (!a.is_string()) fail("answers[" + std::to_string(i) + "]", "expected a string");
                    else t.answers.push_back(a.get<std::string>());
                }
            }
        }

        if (const json* spans = member(rec, "spans", "spans")) {
            if (!spans->is_array()) {
                fail("spans", "expected an array");
            } else {
                for (std::size_t i = 0; i < spans->size(); ++i) {
                    const auto& s = (*spans)[i];
                    if (!s.is_object()) {
                        fail(span_path(i, ""), "expected an object");
                        continue;
                    }
                    SpanAnnotation span;
                    bool good = get_index(s, "answer_idx", span_path(i, "answer_idx"), span.answer_idx);
                    good = get_index(s, "start", span_path(i, "start"), span.start) && good;
                    good = get_index(s, "end", span_path(i, "end"), span.end) && good;
                    std::string label;
                    if (get_string(s, "label", span_path(i, "label"), label)) {
                        if (auto p = parse_label(label)) span.label = *p;
                        else {
                            fail(span_path(i, "label"), "unknown perspective label '" + label + "'");
                            good = false;
                        }
                    } else {
                        good = false;
                    }
                    if (good && span.answer_idx < t.answers.size() && span.start < span.end &&
                        span.end <= utf8::length(t.answers[span.answer_idx]))
                        span.text = utf8::slice(t.answers[span.answer_idx], span.start, span.end);
                    t.spans.push_back(std::move(span));
                }
            }
        }

        if (const json* sums = member(rec, "summaries", "summaries")) {
            if (!sums->is_object()) {
                fail("summaries", "expected an object");
            } else {
                for (const auto& [key, value] : sums->items()) {
                    const std::string path = "summaries." + key;
                    auto label = parse_label(key);
                    if (!label) {
                        fail(path, "unknown perspective label");
                        continue;
                    }
                    if (!value.is_string()) {
                        fail(path, "expected a string");
                        continue;
                    }
                    t.summaries[*label] = value.get<std::string>();
                }
            }
        }

        if (!ok) return std::nullopt;
        for (auto d : validate_thread(t)) {
            d.line = line;
            if (d.severity == Severity::Error) ok = false;
            diags.push_back(std::move(d));
        }
        if (!ok) return std::nullopt;
        return t;
    }
};

}  // namespace

Dataset parse_corpus(std::istream& in) {
    if (!in) throw IoError("corpus stream is not readable");
    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank(line)) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded()) {
            ds.diagnostics.push_back({lineno, "", "malformed JSON", Severity::Error});
            continue;
        }
        RecordParser parser{lineno, ds.diagnostics};
        if (auto t = parser.parse(rec)) ds.threads.push_back(std::move(*t));
    }
    if (in.bad()) throw IoError("read error while parsing corpus stream");
    return ds;
}

Dataset load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus file: " + path);
    return parse_corpus(in);
}

std::string serialize_thread(const Thread& t) {
    ordered_json j;
    j["id"] = t.id;
    j["question"] = t.question;
    j["category"] = t.category;
    j["answers"] = t.answers;
    ordered_json spans = ordered_json::array();
    for (const auto& s : t.spans) {
        ordered_json js;
        js["answer_idx"] = s.answer_idx;
        js["start"] = s.start;
        js["end"] = s.end;
        js["label"] = label_name(s.label);
        spans.push_back(std::move(js));
    }
    j["spans"] = std::move(spans);
    ordered_json sums = ordered_json::object();
    for (Perspective p : kAllPerspectives) {
        auto it = t.summaries.find(p);
        if (it != t.summaries.end()) sums[std::string(label_name(p))] = it->second;
    }
    j["summaries"] = std::move(sums);
    return j.dump();
}

void write_corpus(std::ostream& out, const std::vector<Thread>& threads) {
    for (const auto& t : threads) out << serialize_thread(t) << '\n';
}

void save_corpus(const std::string& path, const std::vector<Thread>& threads) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write corpus file: " + path);
    write_corpus(out, threads);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace plasma::corpus
