#include "priordepth/scene.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace priordepth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Band-limited plane texture: a fixed bias plus sinusoids in the plane's
// world coordinates, with per-channel amplitudes. One dominant wave per
// channel with channel-distinct periods makes the per-pixel photometric
// error essentially unimodal in the warp misalignment: the channel
// autocorrelations only line up at zero shift. A weaker plane-unique wave
// per channel gives each plane its own identity.
struct PlaneTexture {
    struct Wave {
        double fu, fv;   // cycles per meter
        double amp[3];   // per channel
        double phase[3]; // per channel
    };
    std::vector<Wave> waves;

    double sample(double x, double y, int channel) const {
        double v = 0.5;
        for (const Wave& w : waves)
            v += w.amp[channel] * std::sin(2.0 * kPi * (w.fu * x + w.fv * y) + w.phase[channel]);
        return v;
    }
};

// base screen-space periods (pixels) per channel at the band-limit depth
constexpr double kChannelPeriods[3] = {14.0, 18.0, 23.0};

PlaneTexture::Wave make_wave(int channel, double period_px, double depth, double fx, double amp,
                             std::mt19937& rng) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    const double f = fx / (period_px * depth); // cycles per meter
    const double theta = angle(rng);
    PlaneTexture::Wave w{};
    w.fu = f * std::cos(theta);
    w.fv = f * std::sin(theta);
    w.amp[channel] = amp;
    for (double& p : w.phase) p = phase(rng);
    return w;
}

// Shared waves (one per channel) are identical across planes so the jump at
// plane boundaries stays moderate; disoccluded pixels inevitably blend both
// sides of the source's depth edge.
PlaneTexture make_texture(double depth, double fx, const PlaneTexture& shared,
                          std::mt19937& rng) {
    PlaneTexture t = shared;
    for (int c = 0; c < 3; ++c)
        t.waves.push_back(make_wave(c, 1.15 * kChannelPeriods[c], depth, fx, 0.14, rng));
    return t;
}

PlaneTexture make_shared_texture(double depth, double fx, std::mt19937& rng) {
    PlaneTexture t;
    for (int c = 0; c < 3; ++c)
        t.waves.push_back(make_wave(c, kChannelPeriods[c], depth, fx, 0.28, rng));
    return t;
}

// Fronto-parallel plane Z = z0 + slope_x * X, optionally bounded by a world
// rectangle. Everything lives in the target camera frame.
struct Plane {
    double z0 = 10.0;
    double slope_x = 0.0;
    bool bounded = false;
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    PlaneTexture texture;
};

struct Hit {
    double lambda = 0.0; // depth along the ray's z
    double x = 0.0, y = 0.0;
    int plane = -1;
};

// origin + lambda*dir with dir.z = 1 in the target frame
bool intersect(const Plane& p, const Vec3& origin, const Vec3& dir, Hit* hit) {
    const double den = dir[2] - p.slope_x * dir[0];
    if (std::abs(den) < 1e-12) return false;
    const double lambda = (p.z0 + p.slope_x * origin[0] - origin[2]) / den;
    if (lambda <= 1e-6) return false;
    const double x = origin[0] + lambda * dir[0];
    const double y = origin[1] + lambda * dir[1];
    if (p.bounded && (x < p.x0 || x >= p.x1 || y < p.y0 || y >= p.y1)) return false;
    hit->lambda = lambda;
    hit->x = x;
    hit->y = y;
    return true;
}

struct RenderResult {
    Tensor4 image;
    DepthMap depth;
    SemanticMap semantic;
};

RenderResult render(const std::vector<Plane>& planes, const CameraIntrinsics& K,
                    const PoseSE3& pose, int w, int h) {
    // camera center and ray frame of the posed camera, in the target frame
    const PoseSE3 inv = pose.inverse();
    RenderResult r{Tensor4(1, 3, h, w), DepthMap(h, w), SemanticMap(h, w)};
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            Vec3 dir_cam{(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0};
            Vec3 dir{
                inv.rotation[0][0] * dir_cam[0] + inv.rotation[0][1] * dir_cam[1] + inv.rotation[0][2],
                inv.rotation[1][0] * dir_cam[0] + inv.rotation[1][1] * dir_cam[1] + inv.rotation[1][2],
                inv.rotation[2][0] * dir_cam[0] + inv.rotation[2][1] * dir_cam[1] + inv.rotation[2][2]};
            const Vec3& origin = inv.translation;

            Hit best;
            best.lambda = std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < planes.size(); ++p) {
                Hit hit;
                if (intersect(planes[p], origin, dir, &hit) && hit.lambda < best.lambda) {
                    hit.plane = static_cast<int>(p);
                    best = hit;
                }
            }
            if (best.plane < 0)
                throw std::runtime_error("make_synthetic_scene: ray escaped the scene");

            for (int c = 0; c < 3; ++c)
                r.image.at(0, c, v, u) =
                    static_cast<float>(planes[best.plane].texture.sample(best.x, best.y, c));
            // lambda is z-depth in the ray camera because dir_cam.z = 1
            r.depth.at(v, u) = static_cast<float>(best.lambda);
            r.semantic.at(v, u) = best.plane;
        }
    return r;
}

} // namespace

SyntheticScene make_synthetic_scene(const SceneSpec& spec) {
    if (spec.width < 16 || spec.height < 16)
        throw std::invalid_argument("make_synthetic_scene: size dims must be >= 16");

    const int w = spec.width, h = spec.height;
    CameraIntrinsics K;
    K.fx = K.fy = 0.9 * w;
    K.cx = 0.5 * (w - 1);
    K.cy = 0.5 * (h - 1);

    std::mt19937 rng(spec.texture_seed);

    // rectangle extents from a pixel box backprojected at the plane depth
    auto rect = [&](double px0, double px1, double py0, double py1, double depth, Plane* p) {
        p->bounded = true;
        p->x0 = (px0 * (w - 1) - K.cx) / K.fx * depth;
        p->x1 = (px1 * (w - 1) - K.cx) / K.fx * depth;
        p->y0 = (py0 * (h - 1) - K.cy) / K.fy * depth;
        p->y1 = (py1 * (h - 1) - K.cy) / K.fy * depth;
    };

    // waves every plane shares, band-limited for the deepest plane (a fixed
    // spatial frequency projects finer the farther the surface)
    const PlaneTexture shared = make_shared_texture(11.0, K.fx, rng);

    std::vector<Plane> planes;
    {
        Plane bg;
        bg.z0 = 10.0;
        if (spec.layout == SceneLayout::Slanted) bg.slope_x = 0.25;
        bg.texture = make_texture(11.0, K.fx, shared, rng);
        planes.push_back(bg);
    }
    if (spec.layout == SceneLayout::ThreePlane) {
        Plane a;
        a.z0 = 4.0;
        rect(0.10, 0.45, 0.25, 0.80, a.z0, &a);
        a.texture = make_texture(a.z0, K.fx, shared, rng);
        planes.push_back(a);
        Plane b;
        b.z0 = 6.0;
        rect(0.55, 0.90, 0.20, 0.70, b.z0, &b);
        b.texture = make_texture(b.z0, K.fx, shared, rng);
        planes.push_back(b);
    } else {
        Plane fg;
        fg.z0 = spec.layout == SceneLayout::Slanted ? 4.5 : 4.0;
        rect(0.25, 0.70, 0.30, 0.78, fg.z0, &fg);
        fg.texture = make_texture(fg.z0, K.fx, shared, rng);
        planes.push_back(fg);
    }

    SyntheticScene scene;
    scene.intrinsics = K;
    std::vector<Vec3> translations = spec.source_translations;
    if (translations.empty()) {
        // as many whole pixels of foreground parallax as the 0.3 m
        // translation budget allows
        const double fg_depth = planes.back().z0;
        const int fg_px = 2.0 * fg_depth / K.fx <= 0.3 ? 2 : 1;
        const double tx = fg_px * fg_depth / K.fx;
        translations = {{tx, 0.0, 0.0}, {-tx, 0.0, 0.0}};
    }
    for (const Vec3& t : translations)
        scene.poses.push_back(pose_from_axis_angle({0, 0, 0}, t));

    RenderResult tgt = render(planes, K, PoseSE3{}, w, h);
    scene.target = std::move(tgt.image);
    scene.gt_depth = std::move(tgt.depth);
    scene.semantic = std::move(tgt.semantic);
    for (const PoseSE3& pose : scene.poses)
        scene.sources.push_back(render(planes, K, pose, w, h).image);
    return scene;
}

} // namespace priordepth
