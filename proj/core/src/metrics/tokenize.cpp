#include "plasma/metrics/tokenize.hpp"

#include <cstdint>

namespace plasma::metrics {

namespace {

struct CodePoint {
    std::string bytes;
    char32_t value = 0;
};

std::vector<CodePoint> decode(std::string_view s) {
    std::vector<CodePoint> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto lead = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        char32_t cp = lead;
        if ((lead & 0xE0) == 0xC0) {
            len = 2;
            cp = lead & 0x1F;
        } else if ((lead & 0xF0) == 0xE0) {
            len = 3;
            cp = lead & 0x0F;
        } else if ((lead & 0xF8) == 0xF0) {
            len = 4;
            cp = lead & 0x07;
        }
        if (i + len > s.size()) len = s.size() - i;
        for (std::size_t k = 1; k < len; ++k)
            cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
        out.push_back({std::string(s.substr(i, len)), cp});
        i += len;
    }
    return out;
}

bool is_space(char32_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_word(char32_t c) {
    if (c >= 0x80) return true;
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_joiner(char32_t c) { return c == '\'' || c == '-'; }

}  // namespace

std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) {
    const auto cps = decode(text);
    std::vector<TokenSpan> out;
    std::size_t i = 0;
    const std::size_t n = cps.size();
    while (i < n) {
        const char32_t c = cps[i].value;
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (is_word(c)) {
            TokenSpan tok;
            tok.start = i;
            while (i < n) {
                const char32_t d = cps[i].value;
                if (is_word(d)) {
                    if (d < 0x80) tok.text.push_back(static_cast<char>(d >= 'A' && d <= 'Z' ? d - 'A' + 'a' : d));
                    else tok.text += cps[i].bytes;
                    ++i;
                } else if (is_joiner(d) && i + 1 < n && is_word(cps[i + 1].value)) {
                    tok.text.push_back(static_cast<char>(d));
                    ++i;
                } else {
                    break;
                }
            }
            tok.end = i;
            out.push_back(std::move(tok));
            continue;
        }
        if (c == '.') {
            const std::size_t start = i;
            while (i < n && cps[i].value == '.') ++i;
            if (i - start == 1) out.push_back({".", start, i});
            continue;
        }
        out.push_back({cps[i].bytes, i, i + 1});
        ++i;
    }
    return out;
}

Tokens tokenize_eval(std::string_view text) {
    Tokens out;
    for (auto& t : tokenize_with_offsets(text)) out.push_back(std::move(t.text));
    return out;
}

std::string detokenize(const Tokens& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

}  // namespace plasma::metrics
