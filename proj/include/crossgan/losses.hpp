#pragma once

#include <algorithm>
#include <cmath>

#include "crossgan/errors.hpp"
#include "crossgan/tensor.hpp"

namespace crossgan {

/// Probabilities are kept this far away from 0 and 1 before taking logs.
inline constexpr double kProbabilityClamp = 1e-7;

inline double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

/// Mean absolute difference between target `y` and reconstruction `r`.
template <typename T>
double l1_loss(const Tensor<T>& y, const Tensor<T>& r) {
    if (!y.same_shape(r)) throw InputError("l1_loss: shape mismatch " + y.shape_string() + " vs " + r.shape_string());
    if (y.empty()) throw InputError("l1_loss: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(static_cast<double>(y[i]) - static_cast<double>(r[i]));
    return s / static_cast<double>(y.size());
}

/// d l1_loss / d r.
template <typename T>
Tensor<T> l1_loss_gradient(const Tensor<T>& y, const Tensor<T>& r) {
    if (!y.same_shape(r)) throw InputError("l1_loss_gradient: shape mismatch");
    Tensor<T> g(r.channels(), r.height(), r.width());
    const T inv_n = T(1) / static_cast<T>(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) g[i] = r[i] > y[i] ? inv_n : (r[i] < y[i] ? -inv_n : T(0));
    return g;
}

/// -[log D(x,y) + log(1 - D(x,G(x)))]: the discriminator minimizes this.
inline double discriminator_loss(double d_real, double d_fake) {
    return -(std::log(clamp_probability(d_real)) + std::log(1.0 - clamp_probability(d_fake)));
}

inline double discriminator_loss_grad_real(double d_real) { return -1.0 / clamp_probability(d_real); }
inline double discriminator_loss_grad_fake(double d_fake) { return 1.0 / (1.0 - clamp_probability(d_fake)); }

/// Non-saturating generator loss -log D(x, G(x)).
inline double generator_adversarial_loss(double d_fake) { return -std::log(clamp_probability(d_fake)); }

inline double generator_adversarial_loss_grad(double d_fake) { return -1.0 / clamp_probability(d_fake); }

}  // namespace crossgan
