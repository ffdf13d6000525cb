#include "plasma/corpus/puma_import.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "plasma/util/error.hpp"
#include "plasma/util/utf8.hpp"

namespace plasma::corpus {

using nlohmann::json;

namespace {

constexpr std::string_view kSummarySuffix = "_SUMMARY";

std::string text_field(const json& rec, const char* key) {
    auto it = rec.find(key);
    return it != rec.end() && it->is_string() ? it->get<std::string>() : std::string();
}

void convert(const json& rec, std::size_t line, Dataset& ds) {
    auto diag = [&](std::string field, std::string msg, Severity sev = Severity::Error) {
        ds.diagnostics.push_back({line, std::move(field), std::move(msg), sev});
    };
    if (!rec.is_object()) {
        diag("", "record is not a JSON object");
        return;
    }
    Thread t;
    t.id = text_field(rec, "uri");
    t.question = text_field(rec, "question");
    t.category = text_field(rec, "category");
    if (t.category.empty()) t.category = "unknown";
    if (auto it = rec.find("answers"); it != rec.end() && it->is_array())
        for (const auto& a : *it)
            if (a.is_string()) t.answers.push_back(a.get<std::string>());

    if (auto it = rec.find("labelled_answer_spans"); it != rec.end() && it->is_object()) {
        for (const auto& [key, items] : it->items()) {
            auto label = parse_label(key);
            if (!label) {
                diag("labelled_answer_spans." + key, "unknown perspective label", Severity::Warning);
                continue;
            }
            if (!items.is_array()) continue;
            for (std::size_t k = 0; k < items.size(); ++k) {
                const std::string path = "labelled_answer_spans." + key + "[" + std::to_string(k) + "]";
                const std::string txt = items[k].is_object() ? text_field(items[k], "txt") : std::string();
                if (txt.empty()) {
                    diag(path, "span without text", Severity::Warning);
                    continue;
                }
                bool located = false;
                for (std::size_t a = 0; a < t.answers.size() && !located; ++a) {
                    const auto byte_pos = t.answers[a].find(txt);
                    if (byte_pos == std::string::npos) continue;
                    SpanAnnotation s;
                    s.answer_idx = a;
                    s.start = utf8::length(std::string_view(t.answers[a]).substr(0, byte_pos));
                    s.end = s.start + utf8::length(txt);
                    s.label = *label;
                    s.text = txt;
                    t.spans.push_back(std::move(s));
                    located = true;
                }
                if (!located) diag(path, "span text not found in any answer", Severity::Warning);
            }
        }
    }

    if (auto it = rec.find("labelled_summaries"); it != rec.end() && it->is_object()) {
        for (const auto& [key, value] : it->items()) {
            std::string_view name = key;
            if (name.ends_with(kSummarySuffix)) name.remove_suffix(kSummarySuffix.size());
            auto label = parse_label(name);
            if (!label || !value.is_string()) {
                diag("labelled_summaries." + key, "unknown summary key", Severity::Warning);
                continue;
            }
            if (!value.get<std::string>().empty()) t.summaries[*label] = value.get<std::string>();
        }
    }

    bool ok = true;
    for (auto d : validate_thread(t)) {
        d.line = line;
        ok = ok && d.severity != Severity::Error;
        ds.diagnostics.push_back(std::move(d));
    }
    if (ok) ds.threads.push_back(std::move(t));
}

}  // namespace

Dataset import_puma(std::istream& in) {
    if (!in) throw IoError("PUMA stream is not readable");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    Dataset ds;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        json arr = json::parse(text, nullptr, false);
        if (arr.is_discarded() || !arr.is_array()) throw InvalidArgument("PUMA file is not a valid JSON array");
        for (std::size_t i = 0; i < arr.size(); ++i) convert(arr[i], i + 1, ds);
        return ds;
    }
    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded()) {
            ds.diagnostics.push_back({lineno, "", "malformed JSON", Severity::Error});
            continue;
        }
        convert(rec, lineno, ds);
    }
    return ds;
}

Dataset import_puma_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open PUMA file: " + path);
    return import_puma(in);
}

}  // namespace plasma::corpus
