#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace plasma::utf8 {

/// Number of code points in a UTF-8 string. Invalid lead bytes count as one
/// code point each.
std::size_t length(std::string_view s);

/// Byte offset of each code point, plus a final entry equal to s.size().
std::vector<std::size_t> code_point_offsets(std::string_view s);

/// Substring by half-open code point range [start, end).
std::string slice(std::string_view s, std::size_t start, std::size_t end);

}  // namespace plasma::utf8
