#include "priordepth/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace priordepth {

Vec3 PoseSE3::apply(const Vec3& p) const {
    Vec3 q;
    for (int i = 0; i < 3; ++i)
        q[i] = rotation[i][0] * p[0] + rotation[i][1] * p[1] + rotation[i][2] * p[2] +
               translation[i];
    return q;
}

PoseSE3 PoseSE3::inverse() const {
    PoseSE3 inv;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) inv.rotation[i][j] = rotation[j][i];
    for (int i = 0; i < 3; ++i)
        inv.translation[i] = -(inv.rotation[i][0] * translation[0] +
                               inv.rotation[i][1] * translation[1] +
                               inv.rotation[i][2] * translation[2]);
    return inv;
}

PoseSE3 PoseSE3::compose(const PoseSE3& then) const {
    PoseSE3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += then.rotation[i][k] * rotation[k][j];
            out.rotation[i][j] = s;
        }
    out.translation = then.apply(translation);
    return out;
}

PoseSE3 pose_from_axis_angle(const Vec3& r, const Vec3& t) {
    const double theta = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    PoseSE3 pose;
    pose.translation = t;
    if (theta < 1e-12) return pose;

    const double kx = r[0] / theta, ky = r[1] / theta, kz = r[2] / theta;
    const double c = std::cos(theta), s = std::sin(theta), v = 1.0 - c;
    pose.rotation = {{{c + kx * kx * v, kx * ky * v - kz * s, kx * kz * v + ky * s},
                      {ky * kx * v + kz * s, c + ky * ky * v, ky * kz * v - kx * s},
                      {kz * kx * v - ky * s, kz * ky * v + kx * s, c + kz * kz * v}}};
    return pose;
}

DepthMap depth_from_sigmoid(const Tensor4& s, double d_min, double d_max) {
    if (!(0.0 < d_min && d_min < d_max))
        throw std::invalid_argument("depth_from_sigmoid: require 0 < d_min < d_max");
    if (s.n() != 1 || s.c() != 1)
        fail_shape("depth_from_sigmoid", "expects a (1,1,h,w) sigmoid map");

    const double min_disp = 1.0 / d_max;
    const double max_disp = 1.0 / d_min;
    DepthMap d(s.h(), s.w());
    for (int y = 0; y < s.h(); ++y)
        for (int x = 0; x < s.w(); ++x) {
            const double disp = min_disp + static_cast<double>(s.at(0, 0, y, x)) * (max_disp - min_disp);
            d.at(y, x) = static_cast<float>(1.0 / disp);
        }
    return d;
}

Tensor4 backproject(const DepthMap& depth, const CameraIntrinsics& K) {
    Tensor4 pts(1, 3, depth.h, depth.w);
    for (int v = 0; v < depth.h; ++v)
        for (int u = 0; u < depth.w; ++u) {
            const double d = depth.at(v, u);
            pts.at(0, 0, v, u) = static_cast<float>((u - K.cx) * d / K.fx);
            pts.at(0, 1, v, u) = static_cast<float>((v - K.cy) * d / K.fy);
            pts.at(0, 2, v, u) = static_cast<float>(d);
        }
    return pts;
}

namespace {

// Rounding slack on the image-bounds test; accepted coordinates are clamped
// back into range so sampling stays in-bounds.
constexpr double kBoundsSlack = 1e-4;

} // namespace

ProjectedGrid project(const Tensor4& points, const CameraIntrinsics& K, const PoseSE3& pose,
                      int image_w, int image_h) {
    if (points.c() != 3) fail_shape("project", "points must be (n,3,h,w)");
    ProjectedGrid g{Tensor4(1, 2, points.h(), points.w()), Tensor4(1, 1, points.h(), points.w())};
    for (int v = 0; v < points.h(); ++v)
        for (int u = 0; u < points.w(); ++u) {
            const Vec3 p{points.at(0, 0, v, u), points.at(0, 1, v, u), points.at(0, 2, v, u)};
            const Vec3 q = pose.apply(p);
            bool ok = q[2] > 1e-6;
            double pu = 0.0, pv = 0.0;
            if (ok) {
                pu = K.fx * q[0] / q[2] + K.cx;
                pv = K.fy * q[1] / q[2] + K.cy;
                ok = pu >= -kBoundsSlack && pu <= image_w - 1 + kBoundsSlack &&
                     pv >= -kBoundsSlack && pv <= image_h - 1 + kBoundsSlack;
                pu = std::clamp(pu, 0.0, static_cast<double>(image_w - 1));
                pv = std::clamp(pv, 0.0, static_cast<double>(image_h - 1));
            }
            g.coords.at(0, 0, v, u) = static_cast<float>(pu);
            g.coords.at(0, 1, v, u) = static_cast<float>(pv);
            g.mask.at(0, 0, v, u) = ok ? 1.0f : 0.0f;
        }
    return g;
}

SampledImage bilinear_sample(const Tensor4& image, const ProjectedGrid& grid) {
    if (grid.coords.c() != 2) fail_shape("bilinear_sample", "coords must be (1,2,h,w)");
    if (grid.mask.h() != grid.coords.h() || grid.mask.w() != grid.coords.w())
        fail_shape("bilinear_sample", "coords and mask grids disagree");

    const int oh = grid.coords.h(), ow = grid.coords.w();
    SampledImage out{Tensor4(image.n(), image.c(), oh, ow), Tensor4(1, 1, oh, ow)};
    for (int v = 0; v < oh; ++v)
        for (int u = 0; u < ow; ++u) {
            const double x = grid.coords.at(0, 0, v, u);
            const double y = grid.coords.at(0, 1, v, u);
            const bool ok = grid.mask.at(0, 0, v, u) != 0.0f && x >= 0.0 &&
                            x <= image.w() - 1 && y >= 0.0 && y <= image.h() - 1;
            if (!ok) {
                out.validity.at(0, 0, v, u) = 0.0f;
                continue; // values already zero
            }
            const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
            const int x1 = std::min(x0 + 1, image.w() - 1);
            const int y1 = std::min(y0 + 1, image.h() - 1);
            const double wx = x - x0, wy = y - y0;
            for (int n = 0; n < image.n(); ++n)
                for (int c = 0; c < image.c(); ++c) {
                    const double top = image.at(n, c, y0, x0) * (1.0 - wx) + image.at(n, c, y0, x1) * wx;
                    const double bot = image.at(n, c, y1, x0) * (1.0 - wx) + image.at(n, c, y1, x1) * wx;
                    out.values.at(n, c, v, u) = static_cast<float>(top * (1.0 - wy) + bot * wy);
                }
            out.validity.at(0, 0, v, u) = 1.0f;
        }
    return out;
}

SampledImage warp(const Tensor4& source, const DepthMap& depth, const CameraIntrinsics& K,
                  const PoseSE3& pose) {
    if (depth.h < 1 || depth.w < 1) fail_shape("warp", "empty depth map");

    // Fused backproject/project/sample with coordinates kept in f64 the
    // whole way, plus a snap of near-integer coordinates, so an identity
    // warp reproduces pixel values bitwise at lattice points.
    const int H = depth.h, W = depth.w;
    SampledImage out{Tensor4(source.n(), source.c(), H, W), Tensor4(1, 1, H, W)};
    for (int v = 0; v < H; ++v)
        for (int u = 0; u < W; ++u) {
            const double d = depth.at(v, u);
            const Vec3 p{(u - K.cx) * d / K.fx, (v - K.cy) * d / K.fy, d};
            const Vec3 q = pose.apply(p);
            if (!(q[2] > 1e-6)) {
                continue; // validity stays 0
            }
            double pu = K.fx * q[0] / q[2] + K.cx;
            double pv = K.fy * q[1] / q[2] + K.cy;
            if (std::abs(pu - std::round(pu)) < 1e-9) pu = std::round(pu);
            if (std::abs(pv - std::round(pv)) < 1e-9) pv = std::round(pv);
            if (pu < 0.0 || pu > source.w() - 1 || pv < 0.0 || pv > source.h() - 1) continue;

            const int x0 = static_cast<int>(pu), y0 = static_cast<int>(pv);
            const int x1 = std::min(x0 + 1, source.w() - 1);
            const int y1 = std::min(y0 + 1, source.h() - 1);
            const double wx = pu - x0, wy = pv - y0;
            for (int n = 0; n < source.n(); ++n)
                for (int c = 0; c < source.c(); ++c) {
                    const double top =
                        source.at(n, c, y0, x0) * (1.0 - wx) + source.at(n, c, y0, x1) * wx;
                    const double bot =
                        source.at(n, c, y1, x0) * (1.0 - wx) + source.at(n, c, y1, x1) * wx;
                    out.values.at(n, c, v, u) = static_cast<float>(top * (1.0 - wy) + bot * wy);
                }
            out.validity.at(0, 0, v, u) = 1.0f;
        }
    return out;
}

} // namespace priordepth
