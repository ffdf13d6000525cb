#include "plasma/nn/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "plasma/util/error.hpp"

namespace plasma::nn {

namespace {
const char* const kReservedNames[kReservedCount] = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocab::Vocab() {
    for (const char* name : kReservedNames) push(name);
}

void Vocab::push(std::string token) {
    index_.emplace(token, static_cast<int>(tokens_.size()));
    tokens_.push_back(std::move(token));
}

Vocab Vocab::build(std::span<const std::string> texts, std::size_t max_size, std::span<const std::string> required) {
    if (max_size <= static_cast<std::size_t>(kReservedCount))
        throw InvalidArgument("vocabulary size must exceed the 4 reserved ids");
    std::map<std::string, std::size_t> counts;
    for (const auto& text : texts)
        for (auto& tok : metrics::tokenize_eval(text)) ++counts[tok];
    std::set<std::string> must;
    for (const auto& text : required)
        for (auto& tok : metrics::tokenize_eval(text)) {
            must.insert(tok);
            counts.emplace(tok, 0);
        }
    for (const char* name : kReservedNames) {
        counts.erase(name);
        must.erase(name);
    }
    if (must.size() + static_cast<std::size_t>(kReservedCount) > max_size) throw InvalidArgument("required tokens do not fit the vocabulary size");
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::size_t optional_slots = max_size - static_cast<std::size_t>(kReservedCount) - must.size();
    Vocab v;
    for (auto& [tok, n] : ranked) {
        if (must.count(tok)) {
            v.push(tok);
        } else if (optional_slots > 0) {
            v.push(tok);
            --optional_slots;
        }
    }
    return v;
}

int Vocab::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

const std::string& Vocab::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
        throw InvalidArgument("token id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const metrics::Tokens& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

std::vector<int> Vocab::encode_text(std::string_view text) const { return encode(metrics::tokenize_eval(text)); }

metrics::Tokens Vocab::decode(std::span<const int> ids) const {
    metrics::Tokens out;
    for (int i : ids)
        if (!is_special(i)) out.push_back(token(i));
    return out;
}

void Vocab::save(std::ostream& out) const {
    for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(std::istream& in) {
    Vocab v;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (n < static_cast<std::size_t>(kReservedCount)) {
            if (line != kReservedNames[n]) throw IoError("vocabulary file does not start with the reserved tokens");
        } else {
            if (line.empty() || v.contains(line)) throw IoError("vocabulary line " + std::to_string(n + 1) + " is empty or duplicated");
            v.push(line);
        }
        ++n;
    }
    if (n < static_cast<std::size_t>(kReservedCount)) throw IoError("vocabulary file is truncated");
    return v;
}

void Vocab::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    save(out);
}

Vocab Vocab::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    return load(in);
}

}  // namespace plasma::nn
