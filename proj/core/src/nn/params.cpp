#include "plasma/nn/params.hpp"

#include "plasma/util/error.hpp"
#include "plasma/util/hash.hpp"

namespace plasma::nn {

void ParamSet::add(std::string name, Tensor value) {
    if (index_.count(name)) throw InvalidArgument("duplicate parameter group " + name);
    index_.emplace(name, names_.size());
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
}

bool ParamSet::contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

const Tensor& ParamSet::get(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw InvalidArgument("unknown parameter group " + std::string(name));
    return values_[it->second];
}

Tensor& ParamSet::get(std::string_view name) {
    return const_cast<Tensor&>(static_cast<const ParamSet&>(*this).get(name));
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

std::uint64_t ParamSet::hash() const {
    Fnv1a64 h;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        h.update(names_[i]);
        h.update_u64(values_[i].rank());
        for (auto e : values_[i].shape()) h.update_u64(e);
        for (double x : values_[i].values()) h.update_f64(x);
    }
    return h.digest();
}

std::string ParamSet::hash_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = hash();
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return out;
}

TrainMask TrainMask::all_of(const ParamSet& params) {
    return TrainMask(std::set<std::string>(params.names().begin(), params.names().end()));
}

Bound::Bound(Tape& tape, const ParamSet& params, const TrainMask& mask) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& name = params.names()[i];
        vars_.emplace(name, tape.parameter(params.at(i), mask.trainable(name)));
    }
}

Var Bound::operator[](std::string_view name) const {
    auto it = vars_.find(std::string(name));
    if (it == vars_.end()) throw InvalidArgument("parameter group not bound: " + std::string(name));
    return it->second;
}

std::unordered_map<std::string, Tensor> Bound::gradients(const ParamSet& params, const TrainMask& mask) const {
    std::unordered_map<std::string, Tensor> out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& name = params.names()[i];
        if (!mask.trainable(name)) continue;
        const Tensor& g = (*this)[name].grad();
        out.emplace(name, g.empty() ? Tensor(params.at(i).shape(), 0.0) : g);
    }
    return out;
}

}  // namespace plasma::nn
