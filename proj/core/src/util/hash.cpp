#include "plasma/util/hash.hpp"

#include <bit>
#include <cstdio>

namespace plasma {

namespace {
constexpr std::uint64_t kPrime = 0x100000001b3ULL;
}

void Fnv1a64::update(std::span<const std::byte> bytes) {
    for (auto b : bytes) {
        state_ ^= static_cast<std::uint64_t>(b);
        state_ *= kPrime;
    }
}

void Fnv1a64::update(std::string_view s) {
    update(std::as_bytes(std::span(s.data(), s.size())));
}

void Fnv1a64::update_u64(std::uint64_t v) {
    // Little-endian byte order regardless of host.
    for (int i = 0; i < 8; ++i) {
        state_ ^= (v >> (8 * i)) & 0xffU;
        state_ *= kPrime;
    }
}

void Fnv1a64::update_f64(double v) { update_u64(std::bit_cast<std::uint64_t>(v)); }

std::string Fnv1a64::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
    return buf;
}

}  // namespace plasma
