#pragma once

#include <algorithm>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "crossgan/errors.hpp"

namespace crossgan {

/// 64-byte aligned allocator. Vectorized kernels peel differently depending on
/// buffer alignment, so a fixed alignment keeps results bit-reproducible.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

/// Dense channel-major (C x H x W) array. Batch size is always one in this
/// library, so there is no batch dimension.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    Tensor(int channels, int height, int width, T fill = T(0))
        : channels_(channels), height_(height), width_(width),
          data_(static_cast<std::size_t>(channels) * height * width, fill) {
        if (channels < 0 || height < 0 || width < 0) throw InputError("negative tensor dimension");
    }

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool same_shape(const Tensor& other) const {
        return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
    }
    std::string shape_string() const {
        return std::to_string(channels_) + "x" + std::to_string(height_) + "x" + std::to_string(width_);
    }

    T& operator()(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
    const T& operator()(int c, int y, int x) const {
        return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
    }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const T> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }
    Buffer<T>& values() { return data_; }
    const Buffer<T>& values() const { return data_; }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(channels_, height_, width_);
        std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
        return out;
    }

    bool operator==(const Tensor& other) const = default;

private:
    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    Buffer<T> data_;
};

/// Stacks the channels of `a` followed by the channels of `b`.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.height() != b.height() || a.width() != b.width())
        throw InputError("concat_channels: spatial size mismatch " + a.shape_string() + " vs " + b.shape_string());
    Tensor<T> out(a.channels() + b.channels(), a.height(), a.width());
    std::copy(a.begin(), a.end(), out.begin());
    std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

/// Splits `t` after its first `first_channels` channels.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& t, int first_channels) {
    Tensor<T> a(first_channels, t.height(), t.width());
    Tensor<T> b(t.channels() - first_channels, t.height(), t.width());
    std::copy(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(a.size()), a.begin());
    std::copy(t.begin() + static_cast<std::ptrdiff_t>(a.size()), t.end(), b.begin());
    return {std::move(a), std::move(b)};
}

}  // namespace crossgan
