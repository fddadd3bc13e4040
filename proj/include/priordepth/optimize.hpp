#pragma once

#include <functional>
#include <string>
#include <vector>

#include "priordepth/losses.hpp"
#include "priordepth/metrics.hpp"
#include "priordepth/scene.hpp"
#include "priordepth/tensor.hpp"

namespace priordepth {

using LossFn = std::function<double(const Tensor4&)>;

// Central differences per coordinate: (f(x+eps e_i) - f(x-eps e_i)) / (2 eps).
// Coordinates are evaluated independently (optionally across threads); the
// result is bitwise independent of the thread count. Throws, naming the
// coordinate, if an evaluation is non-finite. threads <= 0 picks the
// hardware concurrency.
Tensor4 fd_gradient(const LossFn& f, const Tensor4& x, double eps, int threads = 1);

struct OptimConfig {
    int steps = 200;
    double step_size = 8.0; // initial line-search step
    // Probing at +-eps mollifies the |.|, min and hinge kinks of the
    // objective; plain central differences at a tiny eps stall on them.
    double fd_epsilon = 0.02;
    LossWeights weights;     // 1 : 1 : 0.1
    std::uint32_t seed = 0;
    int threads = 0;         // 0 = hardware concurrency
    double d_min = 0.1;
    double d_max = 100.0;
    double init_depth = 7.0;      // constant starting depth
    std::vector<float> init_map;  // optional per-pixel starting depth (h*w)
    SblConfig sbl;
    // The smoothness component is this multiple of smoothness_loss. The
    // customary edge-aware disparity term is three orders below the
    // photometric term; a 1:1 component ratio presumes that scale, and
    // without it the smoothness kink at a constant depth field blocks
    // every descent direction.
    double smooth_scale = 1e-3;
};

// Full scene objective as a function of the sigmoid logit field:
// reprojection + smoothness on 1/depth + the boundary loss on an 8-dim
// descriptor of neighboring depths (the 3x3 patch minus its center),
// recomputed from the perturbed depth on every call. The identity
// photometric error is cached at construction since it does not depend on
// depth. Evaluations are const and thread-safe.
class SceneLossEvaluator {
public:
    SceneLossEvaluator(const SyntheticScene& scene, const OptimConfig& cfg);

    double total(const Tensor4& logits) const;
    LossBreakdown breakdown(const Tensor4& logits) const;
    DepthMap depth_of(const Tensor4& logits) const;

private:
    const SyntheticScene& scene_;
    OptimConfig cfg_;
    std::vector<double> identity_min_;
};

// Depth descriptor fed to the boundary loss: channel k holds the depth of
// the k-th 3x3 neighbor (center excluded), replicate-padded at borders.
Tensor4 depth_patch_features(const DepthMap& depth);

struct StepRecord {
    int step = 0;
    double reproj = 0.0, smooth = 0.0, sbl = 0.0, total = 0.0;
    bool accepted = true;
    double step_len = 0.0;
};

struct OptimResult {
    std::vector<StepRecord> trajectory; // entry 0 is the initial state
    Tensor4 final_logits;
    DepthMap final_depth;
    MetricReport metrics; // median-scaled against the scene ground truth
    int rejected_steps = 0;
};

// Gradient descent on the logit field with Armijo backtracking line search
// (c = 1e-4, up to 20 halvings). Accepted steps never increase the loss.
// Aborts with the step index if the loss turns non-finite.
OptimResult optimize_depth(const SyntheticScene& scene, const OptimConfig& cfg);

// Mean |depth difference| over same-class 4-neighbor pixel pairs within
// 2 px of a semantic boundary. Depth transitions confined to the boundary
// itself score low; depth bleeding across contours scores high.
double boundary_sharpness(const DepthMap& depth, const SemanticMap& semantic);

} // namespace priordepth
