#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "plasma/metrics/tokenize.hpp"

namespace plasma::nn {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kReservedCount = 4;

/// Word-level vocabulary over evaluation tokens. Ids 0..3 are PAD, BOS, EOS
/// and UNK.
class Vocab {
public:
    Vocab();

    /// Most frequent tokens first, ties broken lexicographically, until the
    /// vocabulary holds max_size entries. Tokens of `required` texts are
    /// always kept (they displace the least frequent others). Throws when
    /// max_size <= 4 or the required tokens alone do not fit.
    static Vocab build(std::span<const std::string> texts, std::size_t max_size,
                       std::span<const std::string> required = {});

    std::size_t size() const { return tokens_.size(); }
    int id(std::string_view token) const;  // UNK when absent
    bool contains(std::string_view token) const;
    const std::string& token(int id) const;
    bool is_special(int id) const { return id >= 0 && id < kReservedCount; }

    std::vector<int> encode(const metrics::Tokens& tokens) const;
    std::vector<int> encode_text(std::string_view text) const;
    /// Drops special ids.
    metrics::Tokens decode(std::span<const int> ids) const;

    /// One token per line, in id order (reserved entries included).
    void save(std::ostream& out) const;
    static Vocab load(std::istream& in);
    void save_file(const std::string& path) const;
    static Vocab load_file(const std::string& path);

    bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

private:
    void push(std::string token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace plasma::nn
