#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace priordepth {

// Dense rank-4 array in (n, c, h, w) layout, row-major with w fastest.
// All numeric kernels in the library produce and consume this type.
// Tensors are plain values: copying copies the payload, and every op
// returns a fresh tensor instead of mutating its inputs.
class Tensor4 {
public:
    Tensor4() = default;
    Tensor4(int n, int c, int h, int w);
    Tensor4(int n, int c, int h, int w, std::vector<float> data);

    static Tensor4 full(int n, int c, int h, int w, float value);

    int n() const { return n_; }
    int c() const { return c_; }
    int h() const { return h_; }
    int w() const { return w_; }
    std::size_t size() const { return data_.size(); }

    float& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
    float at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

    // Ref-qualified: a span into a temporary would dangle.
    std::span<float> values() & { return data_; }
    std::span<const float> values() const& { return data_; }
    std::span<float> values() && = delete;
    std::span<const float> values() const&& = delete;
    float* data() & { return data_.data(); }
    const float* data() const& { return data_.data(); }
    float* data() && = delete;
    const float* data() const&& = delete;

    bool same_shape(const Tensor4& other) const {
        return n_ == other.n_ && c_ == other.c_ && h_ == other.h_ && w_ == other.w_;
    }
    bool all_finite() const;

    std::size_t index(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * c_ + c) * h_ + h) * w_ + w;
    }

private:
    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<float> data_;
};

// Uniform fill in [lo, hi) from the caller's generator. Used for seeded
// parameter init and test inputs; consuming the generator is the point.
Tensor4 random_uniform(int n, int c, int h, int w, float lo, float hi, std::mt19937& rng);

// Throws std::invalid_argument with a "what: detail" style message.
[[noreturn]] void fail_shape(const char* op, const std::string& detail);

} // namespace priordepth
