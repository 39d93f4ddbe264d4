#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "crossgan/errors.hpp"
#include "crossgan/nn/params.hpp"

namespace crossgan::nn {

enum class OptimizerKind { Momentum, Adam };

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::Momentum ? "momentum" : "adam"; }

inline OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "momentum" || s == "sgd") return OptimizerKind::Momentum;
    if (s == "adam" || s == "adaptive-moments") return OptimizerKind::Adam;
    throw ConfigError("optimizer must be 'momentum' or 'adam', got '" + s + "'");
}

/// Gradient descent with either classical momentum (v <- mu v + g; p -= lr v)
/// or adaptive moments, where `momentum` is the first-moment decay.
template <typename T>
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, double momentum, double beta2 = 0.999, double eps = 1e-8)
        : kind_(kind), lr_(learning_rate), beta1_(momentum), beta2_(beta2), eps_(eps) {}

    void step(ParamSet<T>& params, const ParamSet<T>& grads) {
        if (!initialized_) {
            first_ = params.zeros_like();
            if (kind_ == OptimizerKind::Adam) second_ = params.zeros_like();
            initialized_ = true;
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& p = params[k].values;
            const auto& g = grads[k].values;
            auto& m = first_[k].values;
            if (kind_ == OptimizerKind::Momentum) {
                const T mu = static_cast<T>(beta1_), lr = static_cast<T>(lr_);
                for (std::size_t i = 0; i < p.size(); ++i) {
                    m[i] = mu * m[i] + g[i];
                    p[i] -= lr * m[i];
                }
            } else {
                auto& v = second_[k].values;
                const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
                const T step = static_cast<T>(lr_ / bc1);
                const T inv_bc2 = static_cast<T>(1.0 / bc2);
                const T eps = static_cast<T>(eps_);
                for (std::size_t i = 0; i < p.size(); ++i) {
                    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
                    v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
                    p[i] -= step * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
                }
            }
        }
    }

    std::uint64_t steps() const { return t_; }

private:
    OptimizerKind kind_;
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    bool initialized_ = false;
    std::uint64_t t_ = 0;
    ParamSet<T> first_;
    ParamSet<T> second_;
};

}  // namespace crossgan::nn
