#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "plasma/nn/tape.hpp"
#include "plasma/nn/tensor.hpp"

namespace plasma::nn {

/// Ordered collection of named parameter groups.
class ParamSet {
public:
    void add(std::string name, Tensor value);
    bool contains(std::string_view name) const;
    const Tensor& get(std::string_view name) const;
    Tensor& get(std::string_view name);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const Tensor& at(std::size_t i) const { return values_[i]; }
    Tensor& at(std::size_t i) { return values_[i]; }
    std::size_t scalar_count() const;

    /// FNV-1a over names, shapes and value bit patterns.
    std::uint64_t hash() const;
    std::string hash_hex() const;

    bool operator==(const ParamSet& o) const { return names_ == o.names_ && values_ == o.values_; }

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Names of the parameter groups that may receive updates.
class TrainMask {
public:
    TrainMask() = default;
    explicit TrainMask(std::set<std::string> names) : names_(std::move(names)) {}
    static TrainMask all_of(const ParamSet& params);

    bool trainable(std::string_view name) const { return names_.count(std::string(name)) > 0; }
    const std::set<std::string>& names() const { return names_; }

private:
    std::set<std::string> names_;
};

/// Parameter groups placed on a tape.
class Bound {
public:
    Bound() = default;
    Bound(Tape& tape, const ParamSet& params, const TrainMask& mask);

    Var operator[](std::string_view name) const;
    bool contains(std::string_view name) const { return vars_.count(std::string(name)) > 0; }

    /// Gradients of the trainable groups after Tape::backward(); groups that
    /// received no gradient get zeros.
    std::unordered_map<std::string, Tensor> gradients(const ParamSet& params, const TrainMask& mask) const;

private:
    std::unordered_map<std::string, Var> vars_;
};

}  // namespace plasma::nn
