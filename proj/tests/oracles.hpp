// Test-side reference implementations, kept deliberately naive and
// independent of the library's computation paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "priordepth/losses.hpp"
#include "priordepth/nn_ops.hpp"
#include "priordepth/tensor.hpp"

namespace oracle {

using priordepth::ConvParams;
using priordepth::SblConfig;
using priordepth::SemanticMap;
using priordepth::Tensor4;

// Six nested loops, no shortcuts.
inline Tensor4 conv2d_naive(const Tensor4& x, const ConvParams& p) {
    const int kh = p.weights.h(), kw = p.weights.w();
    const int oh = (x.h() + 2 * p.padding - kh) / p.stride + 1;
    const int ow = (x.w() + 2 * p.padding - kw) / p.stride + 1;
    const int cpg_in = x.c() / p.groups;
    const int cpg_out = p.weights.n() / p.groups;

    Tensor4 y(x.n(), p.weights.n(), oh, ow);
    for (int n = 0; n < x.n(); ++n)
        for (int oc = 0; oc < p.weights.n(); ++oc)
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j) {
                    double acc = p.bias[oc];
                    for (int ic = 0; ic < cpg_in; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int sy = i * p.stride + ky - p.padding;
                                const int sx = j * p.stride + kx - p.padding;
                                if (sy < 0 || sy >= x.h() || sx < 0 || sx >= x.w()) continue;
                                const int g = oc / cpg_out;
                                acc += static_cast<double>(x.at(n, g * cpg_in + ic, sy, sx)) *
                                       p.weights.at(oc, ic, ky, kx);
                            }
                    y.at(n, oc, i, j) = static_cast<float>(acc);
                }
    return y;
}

// Direct evaluation of q/sqrt(C) (softmax(k)^T v) with explicit loops.
inline Tensor4 factor_att_naive(const Tensor4& q, const Tensor4& k, const Tensor4& v) {
    const int N = k.h(), Nq = q.h(), C = q.w(), Cv = v.w();
    Tensor4 out(q.n(), 1, Nq, Cv);
    for (int b = 0; b < q.n(); ++b) {
        // column softmax of k
        std::vector<double> sm(static_cast<std::size_t>(N) * C);
        for (int c = 0; c < C; ++c) {
            double hi = -std::numeric_limits<double>::infinity();
            for (int n = 0; n < N; ++n) hi = std::max(hi, static_cast<double>(k.at(b, 0, n, c)));
            double denom = 0.0;
            for (int n = 0; n < N; ++n) denom += std::exp(k.at(b, 0, n, c) - hi);
            for (int n = 0; n < N; ++n)
                sm[static_cast<std::size_t>(n) * C + c] = std::exp(k.at(b, 0, n, c) - hi) / denom;
        }
        // kv[c][e] then q kv
        for (int nq = 0; nq < Nq; ++nq)
            for (int e = 0; e < Cv; ++e) {
                double acc = 0.0;
                for (int c = 0; c < C; ++c) {
                    double kv = 0.0;
                    for (int n = 0; n < N; ++n)
                        kv += sm[static_cast<std::size_t>(n) * C + c] * v.at(b, 0, n, e);
                    acc += q.at(b, 0, nq, c) / std::sqrt(static_cast<double>(C)) * kv;
                }
                out.at(b, 0, nq, e) = static_cast<float>(acc);
            }
    }
    return out;
}

// Dense attention over all H*W positions, restricted to the criss-cross
// index set: for each u all positions sharing u's row or column get a raw
// q.k score, everything else is excluded; softmax over the surviving set
// and aggregation of v.
inline Tensor4 criss_cross_attention_brute(const Tensor4& q, const Tensor4& k, const Tensor4& v) {
    const int H = q.h(), W = q.w(), Cq = q.c(), C = v.c();
    Tensor4 out(1, C, H, W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            std::vector<double> scores;
            std::vector<std::pair<int, int>> members;
            for (int ii = 0; ii < H; ++ii)
                for (int jj = 0; jj < W; ++jj) {
                    if (ii != i && jj != j) continue; // not in the criss-cross set
                    double dot = 0.0;
                    for (int c = 0; c < Cq; ++c)
                        dot += static_cast<double>(q.at(0, c, i, j)) * k.at(0, c, ii, jj);
                    scores.push_back(dot);
                    members.emplace_back(ii, jj);
                }
            const double hi = *std::max_element(scores.begin(), scores.end());
            double denom = 0.0;
            for (double s : scores) denom += std::exp(s - hi);
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (std::size_t m = 0; m < members.size(); ++m)
                    acc += std::exp(scores[m] - hi) / denom *
                           v.at(0, c, members[m].first, members[m].second);
                out.at(0, c, i, j) = static_cast<float>(acc);
            }
        }
    return out;
}

// Eqs. of the boundary loss written as an independent double loop over
// anchors and patch members, with no shared helpers.
inline double sbl_brute(const Tensor4& features, const SemanticMap& semantic,
                        const SblConfig& cfg) {
    const int H = features.h(), W = features.w(), C = features.c();
    const int r = cfg.patch / 2;

    auto unit_at = [&](int y, int x) {
        std::vector<double> f(C);
        double norm = 0.0;
        for (int c = 0; c < C; ++c) {
            f[c] = features.at(0, c, y, x);
            norm += f[c] * f[c];
        }
        norm = std::sqrt(norm);
        for (double& v : f) v /= norm;
        return f;
    };

    double total = 0.0;
    long patches = 0;
    for (int i = r; i + r < H; i += cfg.stride)
        for (int j = r; j + r < W; j += cfg.stride) {
            const auto fa = unit_at(i, j);
            double pos_sum = 0.0;
            double neg_min = std::numeric_limits<double>::infinity();
            int pos = 0, neg = 0;
            for (int y = i - r; y <= i + r; ++y)
                for (int x = j - r; x <= j + r; ++x) {
                    const auto fb = unit_at(y, x);
                    double d2 = 0.0;
                    for (int c = 0; c < C; ++c) d2 += (fa[c] - fb[c]) * (fa[c] - fb[c]);
                    if (semantic.at(y, x) == semantic.at(i, j)) {
                        pos_sum += d2;
                        ++pos;
                    } else {
                        neg_min = std::min(neg_min, d2);
                        ++neg;
                    }
                }
            if (pos > cfg.min_count && neg > cfg.min_count) {
                total += pos_sum / pos + std::max(0.0, static_cast<double>(cfg.margin) - neg_min);
                ++patches;
            }
        }
    return patches > 0 ? total / patches : 0.0;
}

// Scalar-loop depth metrics over explicitly masked pixels.
struct MetricsOracle {
    double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0, d1 = 0, d2 = 0, d3 = 0;
};

inline MetricsOracle metrics_naive(const std::vector<double>& pred, const std::vector<double>& gt,
                                   bool median_scale, bool clamp, double lo, double hi) {
    std::vector<double> d = pred, g = gt;
    if (median_scale) {
        auto med = [](std::vector<double> v) {
            std::sort(v.begin(), v.end());
            const std::size_t n = v.size();
            return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        };
        const double s = med(g) / med(d);
        for (double& v : d) v *= s;
    }
    if (clamp) {
        for (double& v : d) v = std::min(std::max(v, lo), hi);
        for (double& v : g) v = std::min(std::max(v, lo), hi);
    }
    MetricsOracle m;
    for (std::size_t i = 0; i < d.size(); ++i) {
        m.abs_rel += std::abs(d[i] - g[i]) / g[i];
        m.sq_rel += (d[i] - g[i]) * (d[i] - g[i]) / g[i];
        m.rmse += (d[i] - g[i]) * (d[i] - g[i]);
        m.rmse_log += std::pow(std::log(d[i]) - std::log(g[i]), 2);
        const double ratio = std::max(d[i] / g[i], g[i] / d[i]);
        m.d1 += ratio < 1.25;
        m.d2 += ratio < 1.5625;
        m.d3 += ratio < 1.953125;
    }
    const double n = static_cast<double>(d.size());
    m.abs_rel /= n;
    m.sq_rel /= n;
    m.rmse = std::sqrt(m.rmse / n);
    m.rmse_log = std::sqrt(m.rmse_log / n);
    m.d1 /= n;
    m.d2 /= n;
    m.d3 /= n;
    return m;
}

// Numerical minimization of the separability energy over (w, b):
//   E(w, b) = (1 - (w t + b))^2 + mean_i (-1 - (w x_i + b))^2 + rho w^2
// by coarse grid search plus shrinking pattern refinement. mean/var
// describe the channel statistics used for the "others" term.
inline double energy_min_numeric(double t, double mean, double var, double rho) {
    auto energy = [&](double w, double b) {
        const double target = 1.0 - (w * t + b);
        // mean over others: E[(-1 - (w x + b))^2] = w^2 var + (w mean + b + 1)^2
        const double others = w * w * var + (w * mean + b + 1.0) * (w * mean + b + 1.0);
        return target * target + others + rho * w * w;
    };

    double best_w = 0.0, best_b = 0.0, best = energy(0.0, 0.0);
    for (int i = -60; i <= 60; ++i)
        for (int j = -60; j <= 60; ++j) {
            const double w = i / 12.0, b = j / 12.0;
            const double e = energy(w, b);
            if (e < best) {
                best = e;
                best_w = w;
                best_b = b;
            }
        }
    double step = 1.0 / 12.0;
    while (step > 1e-10) {
        bool improved = false;
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
                const double w = best_w + di * step, b = best_b + dj * step;
                const double e = energy(w, b);
                if (e < best) {
                    best = e;
                    best_w = w;
                    best_b = b;
                    improved = true;
                }
            }
        if (!improved) step *= 0.5;
    }
    return best;
}

} // namespace oracle
