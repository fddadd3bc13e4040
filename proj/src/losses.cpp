#include "priordepth/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace priordepth {

namespace {

// Per-pixel, per-channel SSIM in f64. The photometric path keeps every
// intermediate at double precision so scalar losses are smooth enough for
// central differences down to eps ~ 1e-4.
std::vector<double> ssim_f64(const Tensor4& a, const Tensor4& b) {
    constexpr double C1 = 0.01 * 0.01;
    constexpr double C2 = 0.03 * 0.03;
    const int H = a.h(), W = a.w();
    auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); };

    std::vector<double> out(a.size());
    for (int n = 0; n < a.n(); ++n)
        for (int c = 0; c < a.c(); ++c)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) {
                    double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
                    for (int di = -1; di <= 1; ++di)
                        for (int dj = -1; dj <= 1; ++dj) {
                            const int y = reflect(i + di, H), x = reflect(j + dj, W);
                            const double va = a.at(n, c, y, x), vb = b.at(n, c, y, x);
                            ma += va;
                            mb += vb;
                            aa += va * va;
                            bb += vb * vb;
                            ab += va * vb;
                        }
                    ma /= 9.0;
                    mb /= 9.0;
                    const double va = aa / 9.0 - ma * ma;
                    const double vb = bb / 9.0 - mb * mb;
                    const double cov = ab / 9.0 - ma * mb;
                    const double num = (2.0 * ma * mb + C1) * (2.0 * cov + C2);
                    const double den = (ma * ma + mb * mb + C1) * (va + vb + C2);
                    out[a.index(n, c, i, j)] = num / den;
                }
    return out;
}

std::vector<double> photometric_error_f64(const Tensor4& pred, const Tensor4& target,
                                          double alpha) {
    const std::vector<double> s = ssim_f64(pred, target);
    const int H = pred.h(), W = pred.w();
    const double inv_c = 1.0 / pred.c();

    std::vector<double> out(static_cast<std::size_t>(H) * W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            double ssim_term = 0.0, l1 = 0.0;
            for (int c = 0; c < pred.c(); ++c) {
                ssim_term += std::clamp((1.0 - s[pred.index(0, c, i, j)]) * 0.5, 0.0, 1.0);
                l1 += std::abs(static_cast<double>(pred.at(0, c, i, j)) - target.at(0, c, i, j));
            }
            out[static_cast<std::size_t>(i) * W + j] =
                alpha * ssim_term * inv_c + (1.0 - alpha) * l1 * inv_c;
        }
    return out;
}

} // namespace

Tensor4 ssim(const Tensor4& a, const Tensor4& b) {
    if (!a.same_shape(b)) fail_shape("ssim", "inputs must share a shape");
    const std::vector<double> s = ssim_f64(a, b);
    Tensor4 out(a.n(), a.c(), a.h(), a.w());
    for (std::size_t i = 0; i < s.size(); ++i) out.values()[i] = static_cast<float>(s[i]);
    return out;
}

Tensor4 photometric_error(const Tensor4& pred, const Tensor4& target, double alpha) {
    if (!pred.same_shape(target)) fail_shape("photometric_error", "inputs must share a shape");
    const std::vector<double> pe = photometric_error_f64(pred, target, alpha);
    Tensor4 out(1, 1, pred.h(), pred.w());
    for (std::size_t i = 0; i < pe.size(); ++i) out.values()[i] = static_cast<float>(pe[i]);
    return out;
}

std::vector<double> identity_error_min(const Tensor4& target,
                                       const std::vector<Tensor4>& sources) {
    const int H = target.h(), W = target.w();
    std::vector<double> out(static_cast<std::size_t>(H) * W,
                            std::numeric_limits<double>::infinity());
    for (const Tensor4& src : sources) {
        const std::vector<double> pe = photometric_error_f64(src, target, 0.85);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], pe[i]);
    }
    return out;
}

ReprojectionResult reprojection_loss(const Tensor4& target, const std::vector<Tensor4>& sources,
                                     const DepthMap& depth, const std::vector<PoseSE3>& poses,
                                     const CameraIntrinsics& K) {
    if (sources.empty()) fail_shape("reprojection_loss", "needs at least one source");
    for (const Tensor4& s : sources)
        if (!s.same_shape(target)) fail_shape("reprojection_loss", "source/target shape mismatch");
    return reprojection_loss_with_identity(target, sources, depth, poses, K,
                                           identity_error_min(target, sources));
}

ReprojectionResult reprojection_loss_with_identity(const Tensor4& target,
                                                   const std::vector<Tensor4>& sources,
                                                   const DepthMap& depth,
                                                   const std::vector<PoseSE3>& poses,
                                                   const CameraIntrinsics& K,
                                                   const std::vector<double>& min_identity) {
    if (sources.empty()) fail_shape("reprojection_loss", "needs at least one source");
    if (sources.size() != poses.size())
        fail_shape("reprojection_loss", "sources and poses are not aligned");
    if (depth.h != target.h() || depth.w != target.w())
        fail_shape("reprojection_loss", "depth/target shape mismatch");
    if (min_identity.size() != static_cast<std::size_t>(target.h()) * target.w())
        fail_shape("reprojection_loss", "identity error map size mismatch");

    const int H = target.h(), W = target.w();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> min_warped(static_cast<std::size_t>(H) * W, inf);

    for (std::size_t k = 0; k < sources.size(); ++k) {
        const SampledImage warped = warp(sources[k], depth, K, poses[k]);
        const std::vector<double> pe = photometric_error_f64(warped.values, target, 0.85);
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                const std::size_t idx = static_cast<std::size_t>(i) * W + j;
                if (warped.validity.at(0, 0, i, j) != 0.0f)
                    min_warped[idx] = std::min(min_warped[idx], pe[idx]);
            }
    }

    ReprojectionResult r;
    r.error_map = Tensor4(1, 1, H, W);
    double sum = 0.0;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * W + j;
            if (min_warped[idx] == inf) continue;
            ++r.valid;
            if (min_warped[idx] < min_identity[idx]) {
                ++r.included;
                sum += min_warped[idx];
                r.error_map.at(0, 0, i, j) = static_cast<float>(min_warped[idx]);
            }
        }
    if (r.valid == 0) throw std::runtime_error("reprojection_loss: empty reprojection support");
    r.loss = r.included > 0 ? sum / r.included : 0.0;
    return r;
}

double smoothness_loss(const Tensor4& disp, const Tensor4& image) {
    if (disp.c() != 1 || disp.n() != 1) fail_shape("smoothness_loss", "disparity must be (1,1,h,w)");
    if (disp.h() != image.h() || disp.w() != image.w())
        fail_shape("smoothness_loss", "disparity/image spatial dims differ");

    double mean_d = 0.0;
    for (float v : disp.values()) mean_d += v;
    mean_d /= static_cast<double>(disp.size());
    if (mean_d == 0.0) throw std::invalid_argument("smoothness_loss: disparity mean is zero");

    const int H = disp.h(), W = disp.w(), C = image.c();
    const double inv_mean = 1.0 / mean_d;
    const double inv_c = 1.0 / C;

    double sum_x = 0.0;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j + 1 < W; ++j) {
            double gi = 0.0;
            for (int c = 0; c < C; ++c)
                gi += std::abs(static_cast<double>(image.at(0, c, i, j + 1)) - image.at(0, c, i, j));
            const double gd = std::abs(static_cast<double>(disp.at(0, 0, i, j + 1)) - disp.at(0, 0, i, j));
            sum_x += gd * inv_mean * std::exp(-gi * inv_c);
        }
    double sum_y = 0.0;
    for (int i = 0; i + 1 < H; ++i)
        for (int j = 0; j < W; ++j) {
            double gi = 0.0;
            for (int c = 0; c < C; ++c)
                gi += std::abs(static_cast<double>(image.at(0, c, i + 1, j)) - image.at(0, c, i, j));
            const double gd = std::abs(static_cast<double>(disp.at(0, 0, i + 1, j)) - disp.at(0, 0, i, j));
            sum_y += gd * inv_mean * std::exp(-gi * inv_c);
        }

    double loss = 0.0;
    if (W > 1) loss += sum_x / (static_cast<double>(H) * (W - 1));
    if (H > 1) loss += sum_y / (static_cast<double>(H - 1) * W);
    return loss;
}

double sbl(const Tensor4& features, const SemanticMap& semantic, const SblConfig& cfg) {
    if (features.n() != 1) fail_shape("sbl", "expects batch size 1");
    if (features.h() != semantic.h || features.w() != semantic.w)
        fail_shape("sbl", "feature and semantic dims differ");
    if (cfg.patch < 3 || cfg.patch % 2 == 0) fail_shape("sbl", "patch must be odd and >= 3");
    if (!(cfg.margin > 0.0f) || cfg.min_count < 1 || cfg.stride < 1)
        fail_shape("sbl", "invalid margin/min_count/stride");

    const int H = features.h(), W = features.w(), C = features.c();
    const int r = cfg.patch / 2;

    // L2-normalize per pixel, contiguous (pixel, channel) layout
    std::vector<double> unit(static_cast<std::size_t>(H) * W * C);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            double sq = 0.0;
            for (int c = 0; c < C; ++c) {
                const double v = features.at(0, c, i, j);
                sq += v * v;
            }
            if (sq == 0.0) throw std::invalid_argument("sbl: degenerate feature (zero norm)");
            const double inv = 1.0 / std::sqrt(sq);
            double* row = unit.data() + (static_cast<std::size_t>(i) * W + j) * C;
            for (int c = 0; c < C; ++c) row[c] = features.at(0, c, i, j) * inv;
        }

    double sum = 0.0;
    long count = 0;
    for (int i = r; i + r < H; i += cfg.stride)
        for (int j = r; j + r < W; j += cfg.stride) {
            const std::int32_t anchor_class = semantic.at(i, j);
            const double* fa = unit.data() + (static_cast<std::size_t>(i) * W + j) * C;

            int n_pos = 0, n_neg = 0;
            double pos_sum = 0.0;
            double neg_min = std::numeric_limits<double>::infinity();
            for (int di = -r; di <= r; ++di)
                for (int dj = -r; dj <= r; ++dj) {
                    const int y = i + di, x = j + dj;
                    const double* fb = unit.data() + (static_cast<std::size_t>(y) * W + x) * C;
                    double d2 = 0.0;
                    for (int c = 0; c < C; ++c) {
                        const double d = fa[c] - fb[c];
                        d2 += d * d;
                    }
                    if (semantic.at(y, x) == anchor_class) {
                        ++n_pos;
                        pos_sum += d2;
                    } else {
                        ++n_neg;
                        neg_min = std::min(neg_min, d2);
                    }
                }
            if (n_pos <= cfg.min_count || n_neg <= cfg.min_count) continue;
            const double d_pos = pos_sum / n_pos;
            const double hinge = std::max(0.0, static_cast<double>(cfg.margin) - neg_min);
            sum += d_pos + hinge;
            ++count;
        }
    return count > 0 ? sum / count : 0.0;
}

LossBreakdown total_loss(double l_reproj, double l_smooth, double l_sbl, const LossWeights& w) {
    if (!(std::isfinite(w.reproj) && std::isfinite(w.smooth) && std::isfinite(w.sbl)))
        throw std::invalid_argument("total_loss: weights must be finite");
    LossBreakdown b;
    b.reproj = l_reproj;
    b.smooth = l_smooth;
    b.sbl = l_sbl;
    b.w_reproj = w.reproj * l_reproj;
    b.w_smooth = w.smooth * l_smooth;
    b.w_sbl = w.sbl * l_sbl;
    b.total = b.w_reproj + b.w_smooth + b.w_sbl;
    return b;
}

} // namespace priordepth
