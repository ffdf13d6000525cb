#include "plasma/util/utf8.hpp"

#include <algorithm>

namespace plasma::utf8 {

namespace {

std::size_t sequence_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) return 2;
    if ((lead & 0xF0) == 0xE0) return 3;
    if ((lead & 0xF8) == 0xF0) return 4;
    return 1;
}

}  // namespace

std::vector<std::size_t> code_point_offsets(std::string_view s) {
    std::vector<std::size_t> out;
    out.reserve(s.size() + 1);
    std::size_t i = 0;
    while (i < s.size()) {
        out.push_back(i);
        i += std::min(sequence_length(static_cast<unsigned char>(s[i])), s.size() - i);
    }
    out.push_back(s.size());
    return out;
}

std::size_t length(std::string_view s) { return code_point_offsets(s).size() - 1; }

std::string slice(std::string_view s, std::size_t start, std::size_t end) {
    const auto offs = code_point_offsets(s);
    const std::size_t n = offs.size() - 1;
    start = std::min(start, n);
    end = std::clamp(end, start, n);
    return std::string(s.substr(offs[start], offs[end] - offs[start]));
}

}  // namespace plasma::utf8
