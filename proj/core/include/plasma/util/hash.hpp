#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace plasma {

/// Incremental 64-bit FNV-1a. Used for checkpoint fingerprints.
class Fnv1a64 {
public:
    void update(std::span<const std::byte> bytes);
    void update(std::string_view s);
    void update_u64(std::uint64_t v);
    void update_f64(double v);

    std::uint64_t digest() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace plasma
