#pragma once

#include <cstdint>
#include <vector>

#include "priordepth/geometry.hpp"
#include "priordepth/tensor.hpp"

namespace priordepth {

// Integer class labels per pixel.
struct SemanticMap {
    int h = 0, w = 0;
    std::vector<std::int32_t> labels;

    SemanticMap() = default;
    SemanticMap(int h, int w, std::int32_t fill = 0)
        : h(h), w(w), labels(static_cast<std::size_t>(h) * w, fill) {}

    std::int32_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * w + x]; }
    std::int32_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * w + x]; }
};

struct SblConfig {
    int patch = 5;       // odd, >= 3
    float margin = 0.65f; // hinge threshold on the nearest cross-class distance
    int min_count = 4;   // both class sets must exceed this for a patch to count
    int stride = 1;      // anchor grid stride
};

struct LossWeights {
    double reproj = 1.0;
    double smooth = 1.0;
    double sbl = 0.1;
};

// Windowed SSIM with a 3x3 mean filter (reflect padding), C1=0.01^2, C2=0.03^2.
// Per-pixel, per-channel map in [-1, 1].
Tensor4 ssim(const Tensor4& a, const Tensor4& b);

// alpha*(1-SSIM)/2 + (1-alpha)*|pred-target|, both terms averaged over
// channels; returns a (1, 1, h, w) map.
Tensor4 photometric_error(const Tensor4& pred, const Tensor4& target, double alpha = 0.85);

struct ReprojectionResult {
    double loss = 0.0;
    Tensor4 error_map;  // per-pixel minimum error where included, else 0
    int included = 0;   // pixels surviving validity + auto-mask
    int valid = 0;      // pixels with at least one valid warped sample
};

// Minimum-over-sources photometric reprojection with auto-masking: each
// source is inverse-warped into the target view; a pixel is included iff it
// has a valid warped sample and its best warped error strictly beats the
// best unwarped (identity) source error. Loss is the mean over included
// pixels; an all-excluded auto-mask yields loss 0. Throws
// "empty reprojection support" when no pixel has a valid sample at all.
ReprojectionResult reprojection_loss(const Tensor4& target, const std::vector<Tensor4>& sources,
                                     const DepthMap& depth, const std::vector<PoseSE3>& poses,
                                     const CameraIntrinsics& K);

// Per-pixel minimum over sources of the unwarped photometric error; depth
// independent, so callers evaluating many depths against one scene can
// compute it once and reuse it. Kept at f64: the scalar loss must stay
// smooth under small depth perturbations.
std::vector<double> identity_error_min(const Tensor4& target,
                                       const std::vector<Tensor4>& sources);

ReprojectionResult reprojection_loss_with_identity(const Tensor4& target,
                                                   const std::vector<Tensor4>& sources,
                                                   const DepthMap& depth,
                                                   const std::vector<PoseSE3>& poses,
                                                   const CameraIntrinsics& K,
                                                   const std::vector<double>& identity_min);

// Edge-aware first-order smoothness of the mean-normalized disparity:
// mean |dx(d/mean d)| e^{-|dx I|} + mean |dy(d/mean d)| e^{-|dy I|},
// image gradients averaged over channels.
double smoothness_loss(const Tensor4& disp, const Tensor4& image);

// Patch-contrastive boundary loss. Features are L2-normalized per pixel;
// for each anchor (patch center, full patch inside the image) the patch
// splits into same-class pixels P+ (the anchor included, contributing a
// zero distance) and cross-class pixels P-. Patches with |P+| > min_count
// and |P-| > min_count contribute mean_{P+} ||F(i)-F(j)||^2 plus the hinge
// [margin - min_{P-} ||F(i)-F(j)||^2]_+; the loss is their mean, or 0 when
// no patch qualifies.
double sbl(const Tensor4& features, const SemanticMap& semantic, const SblConfig& cfg);

struct LossBreakdown {
    double reproj = 0.0, smooth = 0.0, sbl = 0.0;          // raw terms
    double w_reproj = 0.0, w_smooth = 0.0, w_sbl = 0.0;    // weighted terms
    double total = 0.0;
};

LossBreakdown total_loss(double l_reproj, double l_smooth, double l_sbl, const LossWeights& w);

} // namespace priordepth
