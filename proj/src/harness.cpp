#include "priordepth/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "priordepth/attention.hpp"
#include "priordepth/blocks.hpp"
#include "priordepth/tensor_io.hpp"

namespace priordepth {

namespace {

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// The smoothness loss is piecewise linear in each disparity entry except
// through the 1/mean(d) normalization, so the FD error term scales like
// 1/(N^2 mean^3). A small grid with a small mean keeps that term well
// above the f32 resolution of the gradient; monotone diffs >= 0.25 keep
// the |.| kinks out of reach for eps <= 1/8.
Tensor4 richardson_disparity() {
    Tensor4 d(1, 1, 3, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j)
            d.at(0, 0, i, j) =
                static_cast<float>(1.4 + 0.35 * j + 0.3 * i + 0.05 * std::sin(0.7 * i + 0.5 * j));
    return d;
}

Tensor4 richardson_image() {
    Tensor4 im(1, 3, 3, 4);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j)
                im.at(0, c, i, j) = static_cast<float>(0.5 + 0.3 * std::sin(0.4 * i - 0.6 * j + c));
    return im;
}

double grad_diff_norm(const Tensor4& a, const Tensor4& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.values()[i]) - b.values()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

} // namespace

double smoothness_richardson_ratio(double eps0) {
    const Tensor4 image = richardson_image();
    const LossFn f = [&](const Tensor4& d) { return smoothness_loss(d, image); };
    const Tensor4 x = richardson_disparity();

    const Tensor4 g0 = fd_gradient(f, x, eps0);
    const Tensor4 g1 = fd_gradient(f, x, eps0 / 2.0);
    const Tensor4 g2 = fd_gradient(f, x, eps0 / 4.0);
    return grad_diff_norm(g0, g1) / grad_diff_norm(g1, g2);
}

namespace {

CheckResult check_quadratic() {
    // f = sum x^2 at x = 1: gradient exactly 2 for an order-2 scheme, since
    // the cubic error term vanishes and a dyadic eps avoids rounding.
    const LossFn f = [](const Tensor4& t) {
        double s = 0.0;
        for (float v : t.values()) s += static_cast<double>(v) * v;
        return s;
    };
    const Tensor4 x = Tensor4::full(1, 1, 2, 3, 1.0f);
    const Tensor4 g = fd_gradient(f, x, 1.0 / 64.0);
    double dev = 0.0;
    for (float v : g.values()) dev = std::max(dev, std::abs(static_cast<double>(v) - 2.0));
    return {"losses.quadratic", dev < 1e-9, fmt("max |g - 2| = %.3g", dev)};
}

CheckResult check_smoothness_order() {
    const double ratio = smoothness_richardson_ratio(1.0 / 8.0);
    return {"losses.smoothness_order", ratio > 3.5 && ratio < 4.5,
            fmt("Richardson ratio = %.4f (want [3.5, 4.5])", ratio)};
}

CheckResult check_reprojection_eps() {
    SceneSpec spec;
    spec.width = 16;
    spec.height = 16;
    spec.texture_seed = 7;
    const SyntheticScene scene = make_synthetic_scene(spec);
    OptimConfig cfg;

    // Probe the reprojection loss alone at a smoothly perturbed ground
    // truth: that keeps most pixels inside the auto-mask with live
    // photometric gradients. The total objective is unsuitable here: a
    // constant depth field sits exactly on the smoothness kink.
    // multiplier bounded away from 1: pixels exactly at alignment sit on
    // the |pred - target| kink and poison the comparison
    const double disp0 = 1.0 / cfg.d_max, disp1 = 1.0 / cfg.d_min;
    Tensor4 x(1, 1, 16, 16);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            const double m =
                1.05 + 0.03 * std::sin(0.8 * i + 0.3) * std::sin(0.7 * j + 0.1);
            const double d = scene.gt_depth.at(i, j) * m;
            const double s = (1.0 / d - disp0) / (disp1 - disp0);
            x.at(0, 0, i, j) = static_cast<float>(std::log(s / (1.0 - s)));
        }

    const std::vector<double> identity = identity_error_min(scene.target, scene.sources);
    const LossFn f = [&](const Tensor4& logits) {
        const DepthMap depth = depth_from_sigmoid(activation(logits, Activation::Sigmoid),
                                                  cfg.d_min, cfg.d_max);
        return reprojection_loss_with_identity(scene.target, scene.sources, depth, scene.poses,
                                               scene.intrinsics, identity)
            .loss;
    };
    const Tensor4 g1 = fd_gradient(f, x, 1e-3, 0);
    const Tensor4 g2 = fd_gradient(f, x, 1e-4, 0);

    double gmax = 0.0;
    for (float v : g1.values()) gmax = std::max(gmax, std::abs(static_cast<double>(v)));
    long agree = 0, total = 0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
        const double a = g1.values()[i], b = g2.values()[i];
        ++total;
        // 1e-2 relative, with an absolute floor of 0.1% of the gradient
        // scale so negligible coordinates do not dominate the tally
        if (std::abs(a - b) <= std::max(1e-2 * std::max(std::abs(a), std::abs(b)),
                                        1e-3 * gmax))
            ++agree;
    }
    const double frac = static_cast<double>(agree) / total;
    return {"losses.reprojection_eps", frac >= 0.9,
            fmt("eps 1e-3 vs 1e-4 agree on %.1f%% of coordinates (want >= 90%%)", 100.0 * frac)};
}

CheckResult check_cpa_gain() {
    std::mt19937 rng(11);
    const Tensor4 h = random_uniform(1, 8, 5, 5, -1.0f, 1.0f, rng);
    CpaParams params = CpaParams::seeded(8, 4, 0.3f, rng);

    // analytic d(sum cpa)/dg = sum(H' + U') via the sub-ops
    const Tensor4 q = conv2d(h, params.wq), k = conv2d(h, params.wk), v = conv2d(h, params.wv);
    const Tensor4 spatial = cpa_aggregate(cpa_affinity(q, k), v);
    const Tensor4 channel = cpa_channel(h, params.w1, params.w2);
    double analytic = 0.0;
    for (std::size_t i = 0; i < spatial.size(); ++i)
        analytic += static_cast<double>(spatial.values()[i]) + channel.values()[i];

    auto sum_at = [&](float g) {
        CpaParams p = params;
        p.g = g;
        const Tensor4 e = cpa(h, p);
        double s = 0.0;
        for (float x : e.values()) s += x;
        return s;
    };
    const double eps = 1.0 / 256.0;
    const double fd = (sum_at(static_cast<float>(params.g + eps)) -
                       sum_at(static_cast<float>(params.g - eps))) /
                      (2.0 * eps);
    const double rel = std::abs(fd - analytic) / std::max(1.0, std::abs(analytic));
    return {"attention.cpa_gain", rel < 1e-4, fmt("FD vs analytic dE/dg rel err = %.3g", rel)};
}

CheckResult check_sigmoid_depth() {
    const double d_min = 0.1, d_max = 100.0;
    const double b = 1.0 / d_min - 1.0 / d_max;
    const float s = 0.25f;
    const double depth = 1.0 / (1.0 / d_max + s * b);
    const double analytic = -b * depth * depth;

    const double eps = 1.0 / 1024.0; // dyadic: s +- eps stays exact in f32
    auto at = [&](float sv) {
        Tensor4 t(1, 1, 1, 1, {sv});
        return static_cast<double>(depth_from_sigmoid(t, d_min, d_max).at(0, 0));
    };
    const double fd = (at(s + static_cast<float>(eps)) - at(s - static_cast<float>(eps))) / (2.0 * eps);
    const double rel = std::abs(fd - analytic) / std::abs(analytic);
    return {"geometry.sigmoid_depth", rel < 1e-4, fmt("FD vs analytic d(depth)/ds rel err = %.3g", rel)};
}

} // namespace

std::vector<CheckResult> run_gradchecks(const std::string& module) {
    std::vector<CheckResult> out;
    const bool all = module == "all";
    if (all || module == "losses") {
        out.push_back(check_quadratic());
        out.push_back(check_smoothness_order());
        out.push_back(check_reprojection_eps());
    }
    if (all || module == "attention") out.push_back(check_cpa_gain());
    if (all || module == "geometry") out.push_back(check_sigmoid_depth());
    if (out.empty())
        throw std::invalid_argument("gradcheck: unknown module '" + module +
                                    "' (use losses, attention, geometry or all)");
    return out;
}

std::vector<CheckResult> run_blocks_shapecheck() {
    std::vector<CheckResult> out;
    const DepthNetConfig cfg;
    const DepthNetParams params = DepthNetParams::seeded(cfg, 42);

    for (const auto [w, h] : {std::pair{32, 64}, std::pair{64, 96}}) {
        std::mt19937 rng(5);
        const Tensor4 image = random_uniform(1, 3, h, w, 0.0f, 1.0f, rng);
        const DepthNetOutput a = depthnet_forward(image, params);

        bool shapes_ok = true;
        for (int s = 0; s < 4; ++s) {
            const int div = 1 << s;
            const Tensor4& m = a.sigmoid_maps[s];
            if (m.n() != 1 || m.c() != 1 || m.h() != h / div || m.w() != w / div) shapes_ok = false;
        }
        bool range_ok = true;
        for (const Tensor4& m : a.sigmoid_maps)
            for (float v : m.values())
                if (!(v > 0.0f && v < 1.0f)) range_ok = false;

        const DepthNetOutput b = depthnet_forward(image, params);
        bool deterministic = true;
        for (int s = 0; s < 4; ++s)
            for (std::size_t i = 0; i < a.sigmoid_maps[s].size(); ++i)
                if (a.sigmoid_maps[s].values()[i] != b.sigmoid_maps[s].values()[i])
                    deterministic = false;

        const std::string tag = std::to_string(h) + "x" + std::to_string(w);
        out.push_back({"blocks.shapes_" + tag, shapes_ok, "four scales at 1/1, 1/2, 1/4, 1/8"});
        out.push_back({"blocks.sigmoid_range_" + tag, range_ok, "all outputs in (0,1)"});
        out.push_back({"blocks.deterministic_" + tag, deterministic, "repeat forward bit-identical"});
    }

    const std::size_t count = params.param_count();
    std::size_t named = 0;
    for (const auto& [name, t] : params.named_tensors()) named += t.size();
    out.push_back({"blocks.param_accounting", count == named,
                   fmt("param_count %.0f vs named tensors %.0f", static_cast<double>(count),
                       static_cast<double>(named))});
    return out;
}

DemoConfig parse_demo_config(const std::string& text) {
    DemoConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);

        if (key == "layout") {
            if (value == "two-plane") cfg.scene.layout = SceneLayout::TwoPlane;
            else if (value == "three-plane") cfg.scene.layout = SceneLayout::ThreePlane;
            else if (value == "slanted") cfg.scene.layout = SceneLayout::Slanted;
            else throw std::invalid_argument("config: unknown layout '" + value + "'");
        } else if (key == "size") {
            if (std::sscanf(value.c_str(), "%dx%d", &cfg.scene.width, &cfg.scene.height) != 2)
                throw std::invalid_argument("config: size must look like 32x24");
        } else if (key == "steps") {
            cfg.optim.steps = std::stoi(value);
        } else if (key == "weights.rl") {
            cfg.optim.weights.reproj = std::stod(value);
        } else if (key == "weights.sl") {
            cfg.optim.weights.smooth = std::stod(value);
        } else if (key == "weights.sbl") {
            cfg.optim.weights.sbl = std::stod(value);
        } else if (key == "seed") {
            cfg.scene.texture_seed = static_cast<std::uint32_t>(std::stoul(value));
            cfg.optim.seed = cfg.scene.texture_seed;
        } else if (key == "eps") {
            cfg.optim.fd_epsilon = std::stod(value);
        } else if (key == "step_size") {
            cfg.optim.step_size = std::stod(value);
        } else if (key == "init_depth") {
            cfg.optim.init_depth = std::stod(value);
        } else if (key == "threads") {
            cfg.optim.threads = std::stoi(value);
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    return cfg;
}

DemoOutcome run_demo(const DemoConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const SyntheticScene scene = make_synthetic_scene(cfg.scene);
    DemoOutcome outcome;
    outcome.optim = optimize_depth(scene, cfg.optim);
    outcome.sharpness = boundary_sharpness(outcome.optim.final_depth, scene.semantic);

    std::string csv = "step,reproj,smooth,sbl,total\n";
    for (const StepRecord& r : outcome.optim.trajectory) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", r.step, r.reproj, r.smooth,
                      r.sbl, r.total);
        csv += buf;
    }
    write_text(fs::path(out_dir) / "loss.csv", csv);

    const MetricReport& m = outcome.optim.metrics;
    write_text(fs::path(out_dir) / "metrics.csv", m.csv_header() + "\n" + m.csv_row() + "\n");

    const DepthMap& d = outcome.optim.final_depth;
    Tensor4 dt(1, 1, d.h, d.w, std::vector<float>(d.values));
    Tensor4 gt(1, 1, d.h, d.w, std::vector<float>(scene.gt_depth.values));
    tensor_write(dt, (fs::path(out_dir) / "depth_final.plt").string());
    tensor_write_pgm(dt, (fs::path(out_dir) / "depth_final.pgm").string());
    tensor_write_pgm(gt, (fs::path(out_dir) / "depth_gt.pgm").string());
    tensor_write_pgm(scene.target, (fs::path(out_dir) / "target.pgm").string());
    return outcome;
}

Tensor4 cpa_affinity_demo(int channels, int h, int w, int reduction, std::uint32_t seed) {
    std::mt19937 rng(seed);
    const Tensor4 features = random_uniform(1, channels, h, w, -1.0f, 1.0f, rng);
    const CpaParams p = CpaParams::seeded(channels, reduction, 1.0f, rng);
    return cpa_affinity(conv2d(features, p.wq), conv2d(features, p.wk));
}

} // namespace priordepth
