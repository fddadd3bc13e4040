#pragma once

#include <cstdint>
#include <vector>

#include "priordepth/geometry.hpp"
#include "priordepth/losses.hpp"
#include "priordepth/tensor.hpp"

namespace priordepth {

enum class SceneLayout { TwoPlane, ThreePlane, Slanted };

struct SceneSpec {
    SceneLayout layout = SceneLayout::TwoPlane;
    int width = 32;
    int height = 24;
    std::uint32_t texture_seed = 1;
    // One source view per entry; rendered from a camera displaced by the
    // translation (identity rotation). Left empty, two opposing lateral
    // translations are derived from the scene so the foreground parallax is
    // a whole pixel: edge pixels then warp onto pure texels and the
    // disocclusion bands of the two sources cover each other.
    std::vector<Vec3> source_translations;
};

// A piecewise-planar textured scene rendered analytically. The target view
// and every source view are ray-traced against the same planes, so the
// sources are exactly consistent with gt_depth and the poses: warping a
// source with the ground truth recovers the target up to bilinear
// interpolation residue.
struct SyntheticScene {
    Tensor4 target; // (1, 3, h, w), values in (0, 1)
    std::vector<Tensor4> sources;
    DepthMap gt_depth;
    SemanticMap semantic; // plane id per pixel
    CameraIntrinsics intrinsics;
    std::vector<PoseSE3> poses; // target-frame point -> source-frame point
};

// Layouts: two-plane = 10 m background + 4 m foreground rectangle;
// three-plane adds a second rectangle at 6 m; slanted tilts the background
// about the vertical axis. Textures are band-limited sinusoid mixes, one
// per plane, seeded. Two sources with translations (+-0.15, *, 0) m.
SyntheticScene make_synthetic_scene(const SceneSpec& spec);

} // namespace priordepth
