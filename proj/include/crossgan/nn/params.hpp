#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "crossgan/errors.hpp"
#include "crossgan/rng.hpp"
#include "crossgan/tensor.hpp"

namespace crossgan::nn {

/// One named parameter tensor. `shape` is informational (checkpoint
/// manifest); storage is always a flat vector.
template <typename T>
struct NamedParam {
    std::string name;
    std::vector<int> shape;
    Buffer<T> values;
};

/// Ordered collection of named parameters. Layers refer to their tensors
/// by index, so a gradient buffer is simply a second ParamSet with the same
/// layout (see zeros_like).
template <typename T>
class ParamSet {
public:
    std::size_t add(std::string name, std::vector<int> shape, T fill = T(0)) {
        for (const auto& p : params_)
            if (p.name == name) throw ConfigError("duplicate parameter name: " + name);
        const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                              [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
        params_.push_back({std::move(name), std::move(shape), Buffer<T>(n, fill)});
        return params_.size() - 1;
    }

    std::size_t size() const { return params_.size(); }
    NamedParam<T>& operator[](std::size_t i) { return params_[i]; }
    const NamedParam<T>& operator[](std::size_t i) const { return params_[i]; }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.values.size();
        return n;
    }

    const NamedParam<T>* find(const std::string& name) const {
        for (const auto& p : params_)
            if (p.name == name) return &p;
        return nullptr;
    }

    ParamSet zeros_like() const {
        ParamSet out = *this;
        out.set_zero();
        return out;
    }

    void set_zero() {
        for (auto& p : params_) std::fill(p.values.begin(), p.values.end(), T(0));
    }

    bool same_layout(const ParamSet& other) const {
        if (params_.size() != other.params_.size()) return false;
        for (std::size_t i = 0; i < params_.size(); ++i)
            if (params_[i].name != other.params_[i].name || params_[i].shape != other.params_[i].shape) return false;
        return true;
    }

    template <typename U>
    ParamSet<U> cast() const {
        ParamSet<U> out;
        for (const auto& p : params_) {
            const auto idx = out.add(p.name, p.shape);
            for (std::size_t k = 0; k < p.values.size(); ++k) out[idx].values[k] = static_cast<U>(p.values[k]);
        }
        return out;
    }

    bool operator==(const ParamSet& other) const {
        if (!same_layout(other)) return false;
        for (std::size_t i = 0; i < params_.size(); ++i)
            if (params_[i].values != other.params_[i].values) return false;
        return true;
    }

private:
    std::vector<NamedParam<T>> params_;
};

/// Fills a parameter with N(mean, stddev) draws.
template <typename T>
void init_normal(NamedParam<T>& p, Rng& rng, double mean, double stddev) {
    for (auto& v : p.values) v = static_cast<T>(rng.normal(mean, stddev));
}

}  // namespace crossgan::nn
