#pragma once

#include <string>
#include <string_view>

namespace plasma::metrics {

/// Porter (1980) suffix-stripping stemmer, following the reference C
/// implementation. Expects a lowercase word; tokens that contain anything
/// other than a-z are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace plasma::metrics
