#pragma once

#include <array>

#include "priordepth/tensor.hpp"

namespace priordepth {

// Camera convention used throughout: z forward, u right, v down.
// Pixel (u, v) at depth d backprojects to ((u-cx)d/fx, (v-cy)d/fy, d).
struct CameraIntrinsics {
    double fx = 1.0, fy = 1.0;
    double cx = 0.0, cy = 0.0;
};

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

// Rigid transform p' = R p + t.
struct PoseSE3 {
    Mat3 rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    Vec3 translation{0, 0, 0};

    Vec3 apply(const Vec3& p) const;
    PoseSE3 inverse() const;
    PoseSE3 compose(const PoseSE3& then) const; // this followed by `then`
};

// Rodrigues rotation from an axis-angle vector (angle = |r|) plus translation.
PoseSE3 pose_from_axis_angle(const Vec3& r, const Vec3& t);

// Per-pixel metric depth, all values strictly positive.
struct DepthMap {
    int h = 0, w = 0;
    std::vector<float> values;

    DepthMap() = default;
    DepthMap(int h, int w, float fill = 1.0f)
        : h(h), w(w), values(static_cast<std::size_t>(h) * w, fill) {}

    float& at(int y, int x) { return values[static_cast<std::size_t>(y) * w + x]; }
    float at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }
};

// Maps a sigmoid activation s in [0,1] to depth through inverse-disparity
// interpolation: disparity = 1/d_max + s*(1/d_min - 1/d_max), depth = 1/disparity.
// Monotone decreasing in s; s=0 gives d_max, s=1 gives d_min.
DepthMap depth_from_sigmoid(const Tensor4& s, double d_min, double d_max);

// 3D points as a (1, 3, h, w) tensor: channels X, Y, Z.
Tensor4 backproject(const DepthMap& depth, const CameraIntrinsics& K);

// Pixel coordinates of transformed points plus a validity mask.
// coords is (1, 2, h, w) with channels u, v; mask is (1, 1, h, w) in {0,1}.
// Invalid where the transformed z <= 1e-6 or the coordinate leaves
// [0, w-1] x [0, h-1].
struct ProjectedGrid {
    Tensor4 coords;
    Tensor4 mask;
};

ProjectedGrid project(const Tensor4& points, const CameraIntrinsics& K, const PoseSE3& pose,
                      int image_w, int image_h);

// 4-neighbor bilinear lookup of `image` at `grid` coordinates. Masked or
// out-of-bounds samples produce 0 with validity 0.
struct SampledImage {
    Tensor4 values;
    Tensor4 validity; // (1, 1, h, w) in {0,1}
};

SampledImage bilinear_sample(const Tensor4& image, const ProjectedGrid& grid);

// backproject -> project -> sample, the full inverse warp of `source`
// into the view that produced `depth`.
SampledImage warp(const Tensor4& source, const DepthMap& depth, const CameraIntrinsics& K,
                  const PoseSE3& pose);

} // namespace priordepth
