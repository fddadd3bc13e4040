#include "priordepth/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace priordepth {

namespace {

ConvParams seeded_1x1(int in_c, int out_c, bool with_bias, std::mt19937& rng) {
    ConvParams p;
    const float bound = 1.0f / std::sqrt(static_cast<float>(in_c));
    p.weights = random_uniform(out_c, in_c, 1, 1, -bound, bound, rng);
    p.bias.assign(out_c, 0.0f);
    if (with_bias) {
        std::uniform_real_distribution<float> dist(-bound, bound);
        for (float& b : p.bias) b = dist(rng);
    }
    return p;
}

} // namespace

Tensor4 factor_att(const Tensor4& q, const Tensor4& k, const Tensor4& v, int heads) {
    const int C = q.w(), N = k.h(), Nq = q.h(), Cv = v.w();
    if (k.w() != C) fail_shape("factor_att", "q and k embedding dims differ");
    if (v.h() != N) fail_shape("factor_att", "k and v token counts differ");
    if (q.c() != 1 || k.c() != 1 || v.c() != 1)
        fail_shape("factor_att", "token matrices must have c=1");
    if (q.n() != k.n() || q.n() != v.n()) fail_shape("factor_att", "batch sizes differ");
    if (heads < 1 || C % heads != 0 || Cv % heads != 0)
        fail_shape("factor_att", "head count must divide both embedding dims");

    const int hc = C / heads, hcv = Cv / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(C));

    Tensor4 out(q.n(), 1, Nq, Cv);
    std::vector<double> ksm(static_cast<std::size_t>(N));
    std::vector<double> kv(static_cast<std::size_t>(hc) * hcv);
    for (int b = 0; b < q.n(); ++b)
        for (int head = 0; head < heads; ++head) {
            const int c0 = head * hc, cv0 = head * hcv;
            // kv[c][e] = sum_n softmax(k)[n][c] * v[n][e], one column softmax at a time
            std::fill(kv.begin(), kv.end(), 0.0);
            for (int c = 0; c < hc; ++c) {
                double hi = -std::numeric_limits<double>::infinity();
                for (int n = 0; n < N; ++n) hi = std::max(hi, static_cast<double>(k.at(b, 0, n, c0 + c)));
                double denom = 0.0;
                for (int n = 0; n < N; ++n) {
                    ksm[n] = std::exp(k.at(b, 0, n, c0 + c) - hi);
                    denom += ksm[n];
                }
                for (int n = 0; n < N; ++n) {
                    const double wgt = ksm[n] / denom;
                    for (int e = 0; e < hcv; ++e)
                        kv[static_cast<std::size_t>(c) * hcv + e] += wgt * v.at(b, 0, n, cv0 + e);
                }
            }
            for (int n = 0; n < Nq; ++n)
                for (int e = 0; e < hcv; ++e) {
                    double acc = 0.0;
                    for (int c = 0; c < hc; ++c)
                        acc += static_cast<double>(q.at(b, 0, n, c0 + c)) * scale *
                               kv[static_cast<std::size_t>(c) * hcv + e];
                    out.at(b, 0, n, cv0 + e) = static_cast<float>(acc);
                }
        }
    return out;
}

CpaParams CpaParams::seeded(int channels, int reduction, float g, std::mt19937& rng) {
    if (reduction < 1 || channels % reduction != 0)
        fail_shape("CpaParams", "reduction must divide channel count");
    if (channels % 2 != 0) fail_shape("CpaParams", "channel count must be even");
    CpaParams p;
    p.reduction = reduction;
    p.g = g;
    p.wq = seeded_1x1(channels, channels / reduction, true, rng);
    p.wk = seeded_1x1(channels, channels / reduction, true, rng);
    p.wv = seeded_1x1(channels, channels, true, rng);
    p.w2 = seeded_1x1(channels, channels / 2, false, rng);
    p.w1 = seeded_1x1(channels / 2, channels, false, rng);
    return p;
}

Tensor4 cpa_affinity(const Tensor4& q, const Tensor4& k) {
    if (q.n() != 1 || k.n() != 1) fail_shape("cpa_affinity", "expects batch size 1");
    if (!q.same_shape(k)) fail_shape("cpa_affinity", "q and k shapes differ");
    const int C = q.c(), H = q.h(), W = q.w();
    const int S = H + W - 1;

    Tensor4 scores(1, S, H, W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            // row entries, then the column with row i skipped
            for (int jj = 0; jj < W; ++jj) {
                double dot = 0.0;
                for (int c = 0; c < C; ++c)
                    dot += static_cast<double>(q.at(0, c, i, j)) * k.at(0, c, i, jj);
                scores.at(0, jj, i, j) = static_cast<float>(dot);
            }
            int s = W;
            for (int ii = 0; ii < H; ++ii) {
                if (ii == i) continue;
                double dot = 0.0;
                for (int c = 0; c < C; ++c)
                    dot += static_cast<double>(q.at(0, c, i, j)) * k.at(0, c, ii, j);
                scores.at(0, s++, i, j) = static_cast<float>(dot);
            }
        }
    return softmax(scores, 1);
}

Tensor4 cpa_aggregate(const Tensor4& t, const Tensor4& v) {
    if (t.n() != 1 || v.n() != 1) fail_shape("cpa_aggregate", "expects batch size 1");
    const int H = v.h(), W = v.w(), C = v.c();
    if (t.h() != H || t.w() != W || t.c() != H + W - 1)
        fail_shape("cpa_aggregate", "attention map does not match value grid");

    Tensor4 out(1, C, H, W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int jj = 0; jj < W; ++jj)
                    acc += static_cast<double>(t.at(0, jj, i, j)) * v.at(0, c, i, jj);
                int s = W;
                for (int ii = 0; ii < H; ++ii) {
                    if (ii == i) continue;
                    acc += static_cast<double>(t.at(0, s++, i, j)) * v.at(0, c, ii, j);
                }
                out.at(0, c, i, j) = static_cast<float>(acc);
            }
    return out;
}

Tensor4 cpa_channel(const Tensor4& h, const ConvParams& w1, const ConvParams& w2) {
    const int C = h.c();
    if (C % 2 != 0) fail_shape("cpa_channel", "channel count must be even for the C/2 bottleneck");
    if (w2.in_channels() != C || w2.out_channels() != C / 2 || w1.in_channels() != C / 2 ||
        w1.out_channels() != C)
        fail_shape("cpa_channel", "bottleneck weights must map C -> C/2 -> C");

    const Tensor4 z = global_avg_pool(h);           // (n, C, 1, 1)
    const Tensor4 zhat = conv2d(conv2d(z, w2), w1); // (n, C, 1, 1)

    Tensor4 out(h.n(), C, h.h(), h.w());
    for (int n = 0; n < h.n(); ++n)
        for (int c = 0; c < C; ++c) {
            const float gate = 1.0f / (1.0f + std::exp(-zhat.at(n, c, 0, 0)));
            for (int i = 0; i < h.h(); ++i)
                for (int j = 0; j < h.w(); ++j) out.at(n, c, i, j) = gate * h.at(n, c, i, j);
        }
    return out;
}

Tensor4 cpa_fuse(const Tensor4& h_spatial, const Tensor4& u_channel, const Tensor4& h, float g) {
    if (!h_spatial.same_shape(u_channel) || !h_spatial.same_shape(h))
        fail_shape("cpa_fuse", "all three tensors must share a shape");
    Tensor4 out(h.n(), h.c(), h.h(), h.w());
    const std::size_t total = h.size();
    for (std::size_t i = 0; i < total; ++i)
        out.values()[i] = g * (h_spatial.values()[i] + u_channel.values()[i]) + h.values()[i];
    return out;
}

Tensor4 cpa(const Tensor4& h, const CpaParams& p) {
    const int C = h.c();
    if (p.reduction < 1 || C % p.reduction != 0)
        fail_shape("cpa", "reduction must divide channel count");
    if (C % 2 != 0) fail_shape("cpa", "channel count must be even");

    Tensor4 out(h.n(), C, h.h(), h.w());
    for (int n = 0; n < h.n(); ++n) {
        // slice batch entry n
        Tensor4 hn(1, C, h.h(), h.w());
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < h.h(); ++i)
                for (int j = 0; j < h.w(); ++j) hn.at(0, c, i, j) = h.at(n, c, i, j);

        const Tensor4 q = conv2d(hn, p.wq);
        const Tensor4 k = conv2d(hn, p.wk);
        const Tensor4 v = conv2d(hn, p.wv);
        const Tensor4 t = cpa_affinity(q, k);
        const Tensor4 spatial = cpa_aggregate(t, v);
        const Tensor4 channel = cpa_channel(hn, p.w1, p.w2);
        const Tensor4 fused = cpa_fuse(spatial, channel, hn, p.g);

        for (int c = 0; c < C; ++c)
            for (int i = 0; i < h.h(); ++i)
                for (int j = 0; j < h.w(); ++j) out.at(n, c, i, j) = fused.at(0, c, i, j);
    }
    return out;
}

Tensor4 simam_energy(const Tensor4& h, const EnergyConfig& cfg, EnergyStats stats) {
    if (!(cfg.rho > 0.0f)) fail_shape("simam_energy", "rho must be positive");
    if (h.h() < 1 || h.w() < 1) fail_shape("simam_energy", "empty spatial extent");
    const int K = h.h() * h.w();
    if (stats == EnergyStats::LeaveOneOut && K < 2)
        fail_shape("simam_energy", "leave-one-out statistics need at least 2 neurons");

    const double rho = cfg.rho;
    Tensor4 f(h.n(), h.c(), h.h(), h.w());
    for (int n = 0; n < h.n(); ++n)
        for (int c = 0; c < h.c(); ++c) {
            double sum = 0.0, sumsq = 0.0;
            for (int i = 0; i < h.h(); ++i)
                for (int j = 0; j < h.w(); ++j) {
                    const double t = h.at(n, c, i, j);
                    sum += t;
                    sumsq += t * t;
                }
            const double mean_all = sum / K;
            // two-pass variance against the exact mean
            double var_all = 0.0;
            for (int i = 0; i < h.h(); ++i)
                for (int j = 0; j < h.w(); ++j) {
                    const double d = h.at(n, c, i, j) - mean_all;
                    var_all += d * d;
                }
            var_all /= K;
            for (int i = 0; i < h.h(); ++i)
                for (int j = 0; j < h.w(); ++j) {
                    const double t = h.at(n, c, i, j);
                    double mu, var;
                    if (stats == EnergyStats::Shared) {
                        mu = mean_all;
                        var = var_all;
                    } else {
                        mu = (sum - t) / (K - 1);
                        var = (sumsq - t * t) / (K - 1) - mu * mu;
                        var = std::max(var, 0.0);
                    }
                    const double d = t - mu;
                    f.at(n, c, i, j) =
                        static_cast<float>(4.0 * (var + rho) / (d * d + 2.0 * var + 2.0 * rho));
                }
        }
    return f;
}

Tensor4 simam_refine(const Tensor4& h, const Tensor4& f, const BatchNormParams& bn) {
    if (!h.same_shape(f)) fail_shape("simam_refine", "feature and energy shapes differ");
    Tensor4 gated(h.n(), h.c(), h.h(), h.w());
    const std::size_t total = h.size();
    for (std::size_t i = 0; i < total; ++i) {
        const float fv = f.values()[i];
        if (!(fv > 0.0f))
            throw std::invalid_argument("simam_refine: energy must be strictly positive");
        const float gate = 1.0f / (1.0f + std::exp(-1.0f / fv));
        gated.values()[i] = gate * h.values()[i];
    }
    return batch_norm(gated, bn);
}

} // namespace priordepth
