#include "plasma/prompt/template.hpp"

#include <array>

#include "plasma/prompt/profile.hpp"
#include "plasma/util/error.hpp"

namespace plasma::prompt {

namespace {

constexpr std::array<std::string_view, 6> kHeaders = {"TASK: ",     "DEFINITION: ", "BEGIN SUMMARY WITH: ",
                                                      "TONE: ",     "QUESTION: ",   "CONTENT: "};

// Section bodies are single lines.
std::string one_line(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
    return out;
}

}  // namespace

std::string_view section_header(SectionKind kind) { return kHeaders[static_cast<std::size_t>(kind)]; }

PromptParts PromptParts::parse(std::string_view spec) {
    if (spec == "full" || spec == "all") return all();
    PromptParts p = none();
    for (char c : spec) {
        switch (c) {
            case 'P': p.task = true; break;
            case 'D': p.definition = true; break;
            case 'B': p.begin_with = true; break;
            case 'T': p.tone = true; break;
            case ',': case '+': case ' ': break;
            default: throw InvalidArgument("unknown prompt part '" + std::string(1, c) + "' in '" + std::string(spec) + "'");
        }
    }
    return p;
}

std::string PromptParts::name() const {
    std::string out;
    auto add = [&](bool on, const char* s) {
        if (!on) return;
        if (!out.empty()) out += "+";
        out += s;
    };
    add(task, "P");
    add(definition, "D");
    add(begin_with, "B");
    add(tone, "T");
    return out.empty() ? "none" : out;
}

std::string task_line(Perspective p) {
    return "Summarize the following content according to perspective: " + std::string(label_name(p));
}

std::string build_prompt(const PromptSpec& spec) {
    if (!spec.thread) throw InvalidArgument("build_prompt: no thread");
    const auto& t = *spec.thread;
    if (t.answers.empty()) throw InvalidArgument("build_prompt: thread " + t.id + " has no answers");
    const auto& prof = profile_for(spec.perspective);

    std::vector<PromptSection> constraints;
    if (spec.parts.task) constraints.push_back({SectionKind::Task, task_line(spec.perspective)});
    if (spec.parts.definition) constraints.push_back({SectionKind::Definition, std::string(prof.definition)});
    if (spec.parts.begin_with) constraints.push_back({SectionKind::BeginWith, std::string(prof.anchor_text)});
    if (spec.parts.tone) constraints.push_back({SectionKind::Tone, std::string(prof.tone_label)});

    std::string content;
    for (std::size_t i = 0; i < t.answers.size(); ++i) {
        if (i) content += kAnswerSeparator;
        content += one_line(t.answers[i]);
    }
    std::vector<PromptSection> input = {{SectionKind::Question, one_line(t.question)},
                                        {SectionKind::Content, std::move(content)}};

    std::vector<PromptSection> sections;
    auto append = [&](std::vector<PromptSection>& v) {
        for (auto& s : v) sections.push_back(std::move(s));
    };
    if (spec.placement == Placement::Before) {
        append(constraints);
        append(input);
    } else {
        append(input);
        append(constraints);
    }

    std::string out;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (i) out.push_back('\n');
        out += section_header(sections[i].kind);
        out += sections[i].body;
    }
    return out;
}

std::vector<PromptSection> parse_prompt(std::string_view text) {
    std::vector<PromptSection> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        bool found = false;
        for (std::size_t k = 0; k < kHeaders.size(); ++k) {
            if (line.starts_with(kHeaders[k])) {
                out.push_back({static_cast<SectionKind>(k), std::string(line.substr(kHeaders[k].size()))});
                found = true;
                break;
            }
        }
        if (!found) throw InvalidArgument("parse_prompt: unrecognized line '" + std::string(line) + "'");
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return out;
}

}  // namespace plasma::prompt
