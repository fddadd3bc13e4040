#pragma once

#include <vector>

#include "priordepth/tensor.hpp"

namespace priordepth {

// Grouped 2D convolution parameters. Weights are (out_c, in_c/groups, kh, kw);
// in_c and out_c must both be divisible by groups.
struct ConvParams {
    Tensor4 weights;
    std::vector<float> bias; // length out_c
    int stride = 1;
    int padding = 0;
    int groups = 1;

    int out_channels() const { return weights.n(); }
    int in_channels() const { return weights.c() * groups; }
};

// Cross-correlation convolution (no kernel flip), direct evaluation,
// f64 accumulation per output element.
Tensor4 conv2d(const Tensor4& x, const ConvParams& p);

enum class Activation { HardSwish, Sigmoid, Elu };

// Elementwise. hardswish(v) = v*clamp(v+3,0,6)/6, sigmoid(v) = 1/(1+e^-v),
// elu(v) = v for v>=0 else e^v-1.
Tensor4 activation(const Tensor4& x, Activation kind);

struct BatchNormParams {
    std::vector<float> gamma;
    std::vector<float> beta;
    float eps = 1e-5f;
    // When set, normalize with these fixed statistics instead of the
    // batch statistics computed over (n, h, w).
    bool use_running_stats = false;
    std::vector<float> running_mean;
    std::vector<float> running_var;
};

Tensor4 batch_norm(const Tensor4& x, const BatchNormParams& p);

// Exponent-shifted softmax along one axis (0=n, 1=c, 2=h, 3=w).
Tensor4 softmax(const Tensor4& x, int axis);

// Per-channel spatial mean; output shape (n, c, 1, 1).
Tensor4 global_avg_pool(const Tensor4& x);

// Bilinear interpolation with the align-corners-false convention:
// src = (dst + 0.5) * in/out - 0.5, clamped to the valid range.
Tensor4 bilinear_resize(const Tensor4& x, int out_h, int out_w);

} // namespace priordepth
