#include "plasma/corpus/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "plasma/util/error.hpp"
#include "plasma/util/rng.hpp"

namespace plasma::corpus {

namespace {

bool known_split(std::string_view name) {
    return std::find(kSplitNames.begin(), kSplitNames.end(), name) != kSplitNames.end();
}

void accumulate(SplitStats& s, const Thread& t) {
    ++s.threads;
    for (const auto& span : t.spans) ++s.counts[index_of(span.label)].spans;
    for (const auto& [label, _] : t.summaries) ++s.counts[index_of(label)].summaries;
}

}  // namespace

CorpusStats compute_stats(const std::vector<Thread>& threads, const SplitAssignment* splits) {
    CorpusStats stats;
    if (splits) {
        for (const auto& [id, name] : *splits)
            if (!known_split(name)) throw InvalidArgument("unknown split name '" + name + "' for thread " + id);
        for (auto name : kSplitNames) stats.splits[std::string(name)] = {};
    }
    for (const auto& t : threads) {
        std::string split = "all";
        if (splits) {
            auto it = splits->find(t.id);
            if (it == splits->end()) throw InvalidArgument("thread " + t.id + " has no split assignment");
            split = it->second;
        }
        accumulate(stats.splits[split], t);
        accumulate(stats.total, t);
        auto& cat = stats.by_category[t.category];
        for (const auto& span : t.spans) ++cat[index_of(span.label)].spans;
        for (const auto& [label, _] : t.summaries) ++cat[index_of(label)].summaries;
    }
    return stats;
}

std::string render_stats_table(const CorpusStats& stats) {
    std::ostringstream os;
    auto row = [&](const std::string& name, const SplitStats& s) {
        os << std::left << std::setw(20) << (name + " (" + std::to_string(s.threads) + ")");
        for (Perspective p : kAllPerspectives) {
            const auto& c = s.counts[index_of(p)];
            os << std::right << std::setw(14) << (std::to_string(c.spans) + "/" + std::to_string(c.summaries));
        }
        os << '\n';
    };
    os << std::left << std::setw(20) << "split";
    for (Perspective p : kAllPerspectives) os << std::right << std::setw(14) << label_name(p);
    os << '\n';
    // Canonical split order first, anything else after.
    for (auto name : kSplitNames) {
        auto it = stats.splits.find(std::string(name));
        if (it != stats.splits.end()) row(it->first, it->second);
    }
    for (const auto& [name, s] : stats.splits)
        if (!known_split(name)) row(name, s);
    row("total", stats.total);
    return os.str();
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& r) {
    const std::array<double, 3> ratios = {r.train, r.val, r.test};
    double sum = 0.0;
    for (double x : ratios) {
        if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("split ratios must lie in [0, 1]");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");

    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double exact = ratios[i] * static_cast<double>(n);
        sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        remainder[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::array<std::size_t, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainder[a] > remainder[b] + 1e-12;
    });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
    return sizes;
}

SplitAssignment split_dataset(const std::vector<Thread>& threads, const SplitRatios& ratios, std::uint64_t seed) {
    const auto sizes = split_sizes(threads.size(), ratios);
    std::vector<std::size_t> order(threads.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order.begin(), order.end());
    SplitAssignment out;
    std::size_t k = 0;
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t i = 0; i < sizes[s]; ++i, ++k) out[threads[order[k]].id] = std::string(kSplitNames[s]);
    return out;
}

SplitAssignment load_splits(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open split file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InvalidArgument("split file is not a JSON object: " + path);
    SplitAssignment out;
    for (const auto& [name, ids] : j.items()) {
        if (!known_split(name)) throw InvalidArgument("unknown split name '" + name + "' in " + path);
        if (!ids.is_array()) throw InvalidArgument("split '" + name + "' must be an array of ids");
        for (const auto& id : ids) {
            if (!id.is_string()) throw InvalidArgument("split '" + name + "' contains a non-string id");
            auto [it, inserted] = out.emplace(id.get<std::string>(), name);
            if (!inserted) throw InvalidArgument("thread " + it->first + " assigned to more than one split");
        }
    }
    return out;
}

void save_splits(const std::string& path, const std::vector<Thread>& threads, const SplitAssignment& splits) {
    nlohmann::ordered_json j;
    for (auto name : kSplitNames) j[std::string(name)] = nlohmann::ordered_json::array();
    for (const auto& t : threads) {
        auto it = splits.find(t.id);
        if (it != splits.end()) j[it->second].push_back(t.id);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write split file: " + path);
    out << j.dump(1) << '\n';
}

std::vector<Thread> select_split(const std::vector<Thread>& threads, const SplitAssignment& splits,
                                 std::string_view split) {
    std::vector<Thread> out;
    for (const auto& t : threads) {
        auto it = splits.find(t.id);
        if (it != splits.end() && it->second == split) out.push_back(t);
    }
    return out;
}

}  // namespace plasma::corpus
