#include "plasma/corpus/perspective.hpp"

namespace plasma {

namespace {
constexpr std::array<std::string_view, kNumPerspectives> kNames = {"INFORMATION", "CAUSE", "SUGGESTION",
                                                                    "EXPERIENCE", "QUESTION"};
}

std::string_view label_name(Perspective p) { return kNames[index_of(p)]; }

std::optional<Perspective> parse_label(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return perspective_at(i);
    return std::nullopt;
}

}  // namespace plasma
