#include "priordepth/nn_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace priordepth {

Tensor4 conv2d(const Tensor4& x, const ConvParams& p) {
    const int kh = p.weights.h(), kw = p.weights.w();
    const int out_c = p.weights.n(), in_c = x.c();
    const int groups = p.groups;

    if (groups < 1 || p.stride < 1 || p.padding < 0)
        fail_shape("conv2d", "stride must be >=1, padding >=0, groups >=1");
    if (in_c % groups != 0 || out_c % groups != 0)
        fail_shape("conv2d", "channels not divisible by groups");
    if (p.weights.c() != in_c / groups)
        fail_shape("conv2d", "weight shape expects " + std::to_string(p.weights.c() * groups) +
                                 " input channels, got " + std::to_string(in_c));
    if (static_cast<int>(p.bias.size()) != out_c)
        fail_shape("conv2d", "bias length does not match output channels");
    if (x.h() + 2 * p.padding < kh || x.w() + 2 * p.padding < kw)
        fail_shape("conv2d", "kernel does not fit padded input");

    const int oh = (x.h() + 2 * p.padding - kh) / p.stride + 1;
    const int ow = (x.w() + 2 * p.padding - kw) / p.stride + 1;
    const int cpg_in = in_c / groups, cpg_out = out_c / groups;

    Tensor4 y(x.n(), out_c, oh, ow);
    for (int n = 0; n < x.n(); ++n)
        for (int oc = 0; oc < out_c; ++oc) {
            const int g = oc / cpg_out;
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j) {
                    double acc = p.bias[oc];
                    for (int ic = 0; ic < cpg_in; ++ic)
                        for (int ky = 0; ky < kh; ++ky) {
                            const int sy = i * p.stride + ky - p.padding;
                            if (sy < 0 || sy >= x.h()) continue;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int sx = j * p.stride + kx - p.padding;
                                if (sx < 0 || sx >= x.w()) continue;
                                acc += static_cast<double>(x.at(n, g * cpg_in + ic, sy, sx)) *
                                       p.weights.at(oc, ic, ky, kx);
                            }
                        }
                    y.at(n, oc, i, j) = static_cast<float>(acc);
                }
        }
    return y;
}

Tensor4 activation(const Tensor4& x, Activation kind) {
    Tensor4 y = x;
    switch (kind) {
    case Activation::HardSwish:
        for (float& v : y.values()) v = v * std::clamp(v + 3.0f, 0.0f, 6.0f) / 6.0f;
        break;
    case Activation::Sigmoid:
        for (float& v : y.values()) v = 1.0f / (1.0f + std::exp(-v));
        break;
    case Activation::Elu:
        for (float& v : y.values()) v = v >= 0.0f ? v : std::expm1(v);
        break;
    }
    return y;
}

Tensor4 batch_norm(const Tensor4& x, const BatchNormParams& p) {
    const int c = x.c();
    if (static_cast<int>(p.gamma.size()) != c || static_cast<int>(p.beta.size()) != c)
        fail_shape("batch_norm", "gamma/beta length does not match channels");
    if (!(p.eps > 0.0f)) fail_shape("batch_norm", "eps must be positive");
    if (p.use_running_stats &&
        (static_cast<int>(p.running_mean.size()) != c || static_cast<int>(p.running_var.size()) != c))
        fail_shape("batch_norm", "running stats length does not match channels");

    const std::size_t per_channel = static_cast<std::size_t>(x.n()) * x.h() * x.w();
    Tensor4 y(x.n(), x.c(), x.h(), x.w());
    for (int ch = 0; ch < c; ++ch) {
        double mean, var;
        if (p.use_running_stats) {
            mean = p.running_mean[ch];
            var = p.running_var[ch];
        } else {
            double sum = 0.0;
            for (int n = 0; n < x.n(); ++n)
                for (int i = 0; i < x.h(); ++i)
                    for (int j = 0; j < x.w(); ++j) sum += x.at(n, ch, i, j);
            mean = sum / static_cast<double>(per_channel);
            double sq = 0.0;
            for (int n = 0; n < x.n(); ++n)
                for (int i = 0; i < x.h(); ++i)
                    for (int j = 0; j < x.w(); ++j) {
                        const double d = x.at(n, ch, i, j) - mean;
                        sq += d * d;
                    }
            var = sq / static_cast<double>(per_channel);
        }
        const double inv = 1.0 / std::sqrt(var + static_cast<double>(p.eps));
        for (int n = 0; n < x.n(); ++n)
            for (int i = 0; i < x.h(); ++i)
                for (int j = 0; j < x.w(); ++j)
                    y.at(n, ch, i, j) = static_cast<float>(
                        (x.at(n, ch, i, j) - mean) * inv * p.gamma[ch] + p.beta[ch]);
    }
    return y;
}

Tensor4 softmax(const Tensor4& x, int axis) {
    if (axis < 0 || axis > 3) fail_shape("softmax", "axis out of range");
    const int dims[4] = {x.n(), x.c(), x.h(), x.w()};
    const int len = dims[axis];

    Tensor4 y(x.n(), x.c(), x.h(), x.w());
    int idx[4];
    // Iterate all slices orthogonal to `axis`; each slice is softmaxed
    // independently with the max-shift trick.
    const int outer[3] = {dims[axis == 0 ? 1 : 0], dims[axis <= 1 ? 2 : 1], dims[axis <= 2 ? 3 : 2]};
    const int ax[3] = {axis == 0 ? 1 : 0, axis <= 1 ? 2 : 1, axis <= 2 ? 3 : 2};
    for (int a = 0; a < outer[0]; ++a)
        for (int b = 0; b < outer[1]; ++b)
            for (int d = 0; d < outer[2]; ++d) {
                idx[ax[0]] = a;
                idx[ax[1]] = b;
                idx[ax[2]] = d;
                float hi = -std::numeric_limits<float>::infinity();
                for (int k = 0; k < len; ++k) {
                    idx[axis] = k;
                    hi = std::max(hi, x.at(idx[0], idx[1], idx[2], idx[3]));
                }
                double denom = 0.0;
                for (int k = 0; k < len; ++k) {
                    idx[axis] = k;
                    denom += std::exp(static_cast<double>(x.at(idx[0], idx[1], idx[2], idx[3]) - hi));
                }
                for (int k = 0; k < len; ++k) {
                    idx[axis] = k;
                    y.at(idx[0], idx[1], idx[2], idx[3]) = static_cast<float>(
                        std::exp(static_cast<double>(x.at(idx[0], idx[1], idx[2], idx[3]) - hi)) / denom);
                }
            }
    return y;
}

Tensor4 global_avg_pool(const Tensor4& x) {
    if (x.h() < 1 || x.w() < 1) fail_shape("global_avg_pool", "empty spatial extent");
    Tensor4 y(x.n(), x.c(), 1, 1);
    const double inv = 1.0 / (static_cast<double>(x.h()) * x.w());
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c) {
            double sum = 0.0;
            for (int i = 0; i < x.h(); ++i)
                for (int j = 0; j < x.w(); ++j) sum += x.at(n, c, i, j);
            y.at(n, c, 0, 0) = static_cast<float>(sum * inv);
        }
    return y;
}

Tensor4 bilinear_resize(const Tensor4& x, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) fail_shape("bilinear_resize", "output dims must be >=1");
    if (out_h == x.h() && out_w == x.w()) return x;

    Tensor4 y(x.n(), x.c(), out_h, out_w);
    const double sy = static_cast<double>(x.h()) / out_h;
    const double sx = static_cast<double>(x.w()) / out_w;
    for (int i = 0; i < out_h; ++i) {
        double fy = (i + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(x.h() - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, x.h() - 1);
        const double wy = fy - y0;
        for (int j = 0; j < out_w; ++j) {
            double fx = (j + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(x.w() - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, x.w() - 1);
            const double wx = fx - x0;
            for (int n = 0; n < x.n(); ++n)
                for (int c = 0; c < x.c(); ++c) {
                    const double top = x.at(n, c, y0, x0) * (1.0 - wx) + x.at(n, c, y0, x1) * wx;
                    const double bot = x.at(n, c, y1, x0) * (1.0 - wx) + x.at(n, c, y1, x1) * wx;
                    y.at(n, c, i, j) = static_cast<float>(top * (1.0 - wy) + bot * wy);
                }
        }
    }
    return y;
}

} // namespace priordepth
