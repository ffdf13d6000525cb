#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "plasma/corpus/thread.hpp"

namespace plasma::corpus {

inline constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};

/// thread id -> split name ("train", "val" or "test").
using SplitAssignment = std::map<std::string, std::string>;

struct PerspectiveCounts {
    std::size_t spans = 0;
    std::size_t summaries = 0;

    bool operator==(const PerspectiveCounts&) const = default;
};

struct SplitStats {
    std::size_t threads = 0;
    PerspectiveArray<PerspectiveCounts> counts{};

    bool operator==(const SplitStats&) const = default;
};

struct CorpusStats {
    /// Keyed by split name; a single "all" entry when no assignment is given.
    std::map<std::string, SplitStats> splits;
    SplitStats total;
    std::map<std::string, PerspectiveArray<PerspectiveCounts>> by_category;
};

/// Counts spans and summaries per split and perspective. Throws
/// InvalidArgument for unknown split names or unassigned threads.
CorpusStats compute_stats(const std::vector<Thread>& threads, const SplitAssignment* splits = nullptr);

/// Aligned text table with one "spans/summaries" cell per perspective.
std::string render_stats_table(const CorpusStats& stats);

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

/// Seeded shuffle, then largest-remainder apportionment of the counts
/// (ties go to train, then val).
SplitAssignment split_dataset(const std::vector<Thread>& threads, const SplitRatios& ratios, std::uint64_t seed);

/// Split sizes the apportionment rule gives for n threads.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

/// Split file: {"train": [ids], "val": [ids], "test": [ids]}.
SplitAssignment load_splits(const std::string& path);
void save_splits(const std::string& path, const std::vector<Thread>& threads, const SplitAssignment& splits);

/// Threads assigned to `split`, in corpus order.
std::vector<Thread> select_split(const std::vector<Thread>& threads, const SplitAssignment& splits,
                                 std::string_view split);

}  // namespace plasma::corpus
