#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace plasma {

/// The five answer perspectives. The enumerator order is the canonical order
/// for every 5-vector in the toolkit.
enum class Perspective : std::uint8_t { Information = 0, Cause, Suggestion, Experience, Question };

inline constexpr std::size_t kNumPerspectives = 5;

inline constexpr std::array<Perspective, kNumPerspectives> kAllPerspectives = {
    Perspective::Information, Perspective::Cause, Perspective::Suggestion, Perspective::Experience,
    Perspective::Question};

template <typename T>
using PerspectiveArray = std::array<T, kNumPerspectives>;

constexpr std::size_t index_of(Perspective p) { return static_cast<std::size_t>(p); }

constexpr Perspective perspective_at(std::size_t i) { return kAllPerspectives.at(i); }

/// Upper-case label: "INFORMATION", "CAUSE", ...
std::string_view label_name(Perspective p);

/// Accepts the upper-case label name only.
std::optional<Perspective> parse_label(std::string_view name);

}  // namespace plasma
