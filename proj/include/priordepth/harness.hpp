#pragma once

#include <string>
#include <vector>

#include "priordepth/optimize.hpp"
#include "priordepth/scene.hpp"

namespace priordepth {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Richardson order measurement for the central-difference engine on the
// smoothness loss: ||g(e) - g(e/2)|| / ||g(e/2) - g(e/4)|| on a fixed smooth
// disparity/image pair. An order-2 scheme yields a ratio near 4.
double smoothness_richardson_ratio(double eps0);

// Finite-difference sanity checks. module is one of "losses", "attention",
// "geometry" or "all".
std::vector<CheckResult> run_gradchecks(const std::string& module);

// Shape contracts, determinism and parameter accounting of the network
// blocks at two desk-scale input sizes.
std::vector<CheckResult> run_blocks_shapecheck();

struct DemoConfig {
    SceneSpec scene;
    OptimConfig optim;
};

// Flat key=value text: layout, size (WxH), steps, weights.rl, weights.sl,
// weights.sbl, seed, eps, plus step_size, init_depth, threads. '#' starts a
// comment. Unknown keys are an error.
DemoConfig parse_demo_config(const std::string& text);

struct DemoOutcome {
    OptimResult optim;
    double sharpness = 0.0; // boundary_sharpness of the final depth
};

// Runs the depth optimization demo and writes loss.csv, metrics.csv,
// depth_final.plt/.pgm, depth_gt.pgm and target.pgm under out_dir. Given the
// same config this is deterministic byte for byte.
DemoOutcome run_demo(const DemoConfig& cfg, const std::string& out_dir);

// Criss-cross attention map of a seeded random feature tensor, for the
// attn-viz tool: (1, H+W-1, H, W).
Tensor4 cpa_affinity_demo(int channels, int h, int w, int reduction, std::uint32_t seed);

} // namespace priordepth
