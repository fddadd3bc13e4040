#pragma once

#include <random>

#include "priordepth/nn_ops.hpp"
#include "priordepth/tensor.hpp"

namespace priordepth {

// Factorized attention over token matrices: out = (q / sqrt(C)) * (softmax(k)^T v),
// with the softmax taken over the token axis of k, per embedding column.
// Tokens live on the h axis and the embedding on the w axis of a (n, 1, N, C)
// tensor. q and k share C; k and v share N. Linear in token count.
// heads > 1 splits the embedding into equal slices attended independently.
Tensor4 factor_att(const Tensor4& q, const Tensor4& k, const Tensor4& v, int heads = 1);

// Dual-branch context attention: a criss-cross spatial branch plus a
// squeeze-style channel gate, fused with the input through a scalar gain.
struct CpaParams {
    ConvParams wq, wk; // 1x1, C -> C/reduction
    ConvParams wv;     // 1x1, C -> C
    ConvParams w1;     // 1x1, C/2 -> C, no bias
    ConvParams w2;     // 1x1, C -> C/2, no bias
    float g = 0.0f;
    int reduction = 8;

    // Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] init of every projection.
    static CpaParams seeded(int channels, int reduction, float g, std::mt19937& rng);
};

// Attention map over each position's criss-cross set: for u = (i, j) the set
// is all of row i (entries 0..W-1, left to right) followed by column j with
// row i skipped (entries W..W+H-2, top to bottom), so u itself appears once
// and |set| = H+W-1. Scores are dot products q_u . k_s followed by softmax
// over the set. q, k are (1, C', H, W); the result is (1, H+W-1, H, W).
Tensor4 cpa_affinity(const Tensor4& q, const Tensor4& k);

// H'_u = sum_i T[i, u] * v[set_u[i]], the criss-cross aggregation of v
// under an affinity map produced by cpa_affinity on the same grid.
Tensor4 cpa_aggregate(const Tensor4& t, const Tensor4& v);

// Channel gate: z = global_avg_pool(h), zhat = w1(w2 z), out_k = sigmoid(zhat_k) * h_k.
// Requires an even channel count for the C/2 bottleneck.
Tensor4 cpa_channel(const Tensor4& h, const ConvParams& w1, const ConvParams& w2);

// E = g * (H' + U') + H.
Tensor4 cpa_fuse(const Tensor4& h_spatial, const Tensor4& u_channel, const Tensor4& h, float g);

// Full pipeline: 1x1 projections -> affinity -> aggregate, the channel gate,
// then the gained fusion. Batch entries are processed independently.
Tensor4 cpa(const Tensor4& h, const CpaParams& p);

struct EnergyConfig {
    float rho = 1e-4f;
};

enum class EnergyStats {
    Shared,     // channel-wide mean/variance applied to every neuron
    LeaveOneOut // per-neuron statistics excluding the neuron itself
};

// Minimal linear-separability energy per neuron:
//   f* = 4(var + rho) / ((t - mean)^2 + 2 var + 2 rho)
// computed per channel. Low energy marks neurons that stand out from their
// channel. Shared statistics are the pipeline default; the leave-one-out
// variant recomputes mean/variance without the target neuron (needs h*w >= 2).
Tensor4 simam_energy(const Tensor4& h, const EnergyConfig& cfg,
                     EnergyStats stats = EnergyStats::Shared);

// Feature refinement: batch_norm(sigmoid(1/f) ⊙ h). Requires f > 0 everywhere.
Tensor4 simam_refine(const Tensor4& h, const Tensor4& f, const BatchNormParams& bn);

} // namespace priordepth
