#include "priordepth/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace priordepth {

namespace {

std::size_t checked_volume(int n, int c, int h, int w) {
    if (n < 0 || c < 0 || h < 0 || w < 0)
        throw std::invalid_argument("Tensor4: negative dimension");
    std::size_t v = 1;
    for (long long d : {static_cast<long long>(n), static_cast<long long>(c),
                        static_cast<long long>(h), static_cast<long long>(w)}) {
        if (d > 0 && v > (static_cast<std::size_t>(1) << 40) / static_cast<std::size_t>(d))
            throw std::invalid_argument("Tensor4: dimension overflow");
        v *= static_cast<std::size_t>(d);
    }
    return v;
}

} // namespace

Tensor4::Tensor4(int n, int c, int h, int w)
    : n_(n), c_(c), h_(h), w_(w), data_(checked_volume(n, c, h, w), 0.0f) {}

Tensor4::Tensor4(int n, int c, int h, int w, std::vector<float> data)
    : n_(n), c_(c), h_(h), w_(w), data_(std::move(data)) {
    if (data_.size() != checked_volume(n, c, h, w))
        throw std::invalid_argument("Tensor4: data length does not match shape");
}

Tensor4 Tensor4::full(int n, int c, int h, int w, float value) {
    Tensor4 t(n, c, h, w);
    for (float& v : t.data_) v = value;
    return t;
}

bool Tensor4::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor4 random_uniform(int n, int c, int h, int w, float lo, float hi, std::mt19937& rng) {
    Tensor4 t(n, c, h, w);
    std::uniform_real_distribution<float> dist(lo, hi);
    for (float& v : t.values()) v = dist(rng);
    return t;
}

void fail_shape(const char* op, const std::string& detail) {
    throw std::invalid_argument(std::string(op) + ": " + detail);
}

} // namespace priordepth
