// Command-line front end. Talks to the library exclusively through the C
// API in priordepth.h; exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "priordepth.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct TensorDeleter {
    void operator()(pd_tensor* t) const { pd_tensor_free(t); }
};
using TensorPtr = std::unique_ptr<pd_tensor, TensorDeleter>;

int fail_runtime(const std::string& context) {
    std::fprintf(stderr, "error: %s: %s\n", context.c_str(), pd_last_error());
    return kExitRuntime;
}

bool parse_size(const std::string& s, int* w, int* h) {
    return std::sscanf(s.c_str(), "%dx%d", w, h) == 2;
}

int print_report(const char* banner, char* report, int all_pass) {
    std::printf("%s\n", banner);
    std::printf("%s", report);
    pd_string_free(report);
    std::printf("%s\n", all_pass ? "all checks passed" : "CHECK FAILURES PRESENT");
    return all_pass ? kExitOk : kExitRuntime;
}

int run_gradcheck(const std::string& module) {
    char* report = nullptr;
    int all_pass = 0;
    if (pd_gradcheck(module.c_str(), &report, &all_pass) != PD_OK)
        return fail_runtime("gradcheck");
    return print_report("finite-difference checks", report, all_pass);
}

int run_blocks_shapecheck() {
    char* report = nullptr;
    int all_pass = 0;
    if (pd_blocks_shapecheck(&report, &all_pass) != PD_OK)
        return fail_runtime("blocks-shapecheck");
    return print_report("network block checks", report, all_pass);
}

int run_demo(const pd_demo_config& cfg, const std::string& out_dir) {
    pd_demo_result result;
    if (pd_demo_run(&cfg, out_dir.c_str(), &result) != PD_OK) return fail_runtime("demo");

    std::printf("demo finished: %d steps on %s %dx%d (seed %u)\n", cfg.steps, cfg.layout,
                cfg.width, cfg.height, cfg.seed);
    std::printf("  loss %.6g -> %.6g (%d rejected steps)\n", result.initial_loss,
                result.final_loss, result.rejected_steps);
    std::printf("  boundary sharpness %.6g\n", result.boundary_sharpness);
    const pd_metric_report& m = result.metrics;
    std::printf("  abs_rel %.4f  sq_rel %.4f  rmse %.4f  rmse_log %.4f  d1 %.4f  d2 %.4f  d3 %.4f\n",
                m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.delta1, m.delta2, m.delta3);
    std::printf("  outputs in %s\n", out_dir.c_str());
    return kExitOk;
}

int run_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& mask_path, bool median_scale, bool clamp, double lo, double hi) {
    pd_tensor* raw = nullptr;
    if (pd_tensor_read(pred_path.c_str(), &raw) != PD_OK) return fail_runtime("reading pred");
    TensorPtr pred(raw);
    if (pd_tensor_read(gt_path.c_str(), &raw) != PD_OK) return fail_runtime("reading gt");
    TensorPtr gt(raw);
    TensorPtr mask;
    if (!mask_path.empty()) {
        if (pd_tensor_read(mask_path.c_str(), &raw) != PD_OK) return fail_runtime("reading mask");
        mask.reset(raw);
    }

    pd_metric_report m;
    if (pd_eval_metrics(pred.get(), gt.get(), mask.get(), median_scale ? 1 : 0, clamp ? 1 : 0, lo,
                        hi, &m) != PD_OK)
        return fail_runtime("eval");

    std::printf("abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3\n");
    std::printf("%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", m.abs_rel, m.sq_rel, m.rmse, m.rmse_log,
                m.delta1, m.delta2, m.delta3);
    std::printf("\n");
    std::printf("  %-9s %10.6f   %-9s %10.6f\n", "abs rel", m.abs_rel, "delta<1.25", m.delta1);
    std::printf("  %-9s %10.6f   %-9s %10.6f\n", "sq rel", m.sq_rel, "delta<1.25^2", m.delta2);
    std::printf("  %-9s %10.6f   %-9s %10.6f\n", "rmse", m.rmse, "delta<1.25^3", m.delta3);
    std::printf("  %-9s %10.6f\n", "rmse log", m.rmse_log);
    return kExitOk;
}

int run_attn_viz(int channels, int width, int height, int reduction, uint32_t seed,
                 const std::string& pos, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        std::fprintf(stderr, "error: cannot create %s\n", out_dir.c_str());
        return kExitRuntime;
    }

    pd_tensor* raw = nullptr;
    if (pd_attention_map(channels, height, width, reduction, seed, &raw) != PD_OK)
        return fail_runtime("attention map");
    TensorPtr tmap(raw);

    uint32_t dims[4];
    pd_tensor_dims(tmap.get(), dims);
    const float* data = pd_tensor_data(tmap.get());

    // full map as CSV: one row per criss-cross entry, one column per position
    const fs::path csv_path = fs::path(out_dir) / "attention.csv";
    std::ofstream csv(csv_path);
    if (!csv) {
        std::fprintf(stderr, "error: cannot write %s\n", csv_path.string().c_str());
        return kExitRuntime;
    }
    const uint32_t S = dims[1], H = dims[2], W = dims[3];
    for (uint32_t s = 0; s < S; ++s) {
        for (uint32_t p = 0; p < H * W; ++p) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.9g", data[s * H * W + p]);
            csv << (p ? "," : "") << buf;
        }
        csv << "\n";
    }
    csv.close();

    int u = static_cast<int>(W) / 2, v = static_cast<int>(H) / 2;
    if (!pos.empty() && std::sscanf(pos.c_str(), "%d,%d", &u, &v) != 2) {
        std::fprintf(stderr, "error: --pos must look like u,v\n");
        return kExitUsage;
    }
    if (pd_attention_place(tmap.get(), u, v, &raw) != PD_OK) return fail_runtime("attention place");
    TensorPtr placed(raw);
    const fs::path pgm_path = fs::path(out_dir) / "attention_pos.pgm";
    if (pd_tensor_write_pgm(placed.get(), pgm_path.string().c_str()) != PD_OK)
        return fail_runtime("writing pgm");

    std::printf("wrote %s and %s (anchor %d,%d)\n", csv_path.string().c_str(),
                pgm_path.string().c_str(), u, v);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic-scene depth estimation toolkit"};
    app.require_subcommand(1);

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference sanity checks");
    std::string module = "all";
    gradcheck->add_option("--module", module, "losses, attention, geometry or all");

    // demo
    auto* demo = app.add_subcommand("demo", "synthetic-scene depth optimization");
    std::string layout, size_str, config_path, out_dir = "demo_out";
    int steps = -1;
    double w_rl = -1.0, w_sl = -1.0, w_sbl = -1.0, eps = -1.0;
    long long seed = -1;
    int threads = -1;
    demo->add_option("--config", config_path, "key=value config file");
    demo->add_option("--layout", layout, "two-plane, three-plane or slanted");
    demo->add_option("--size", size_str, "scene size WxH, e.g. 32x24");
    demo->add_option("--steps", steps, "optimization steps");
    demo->add_option("--weights.rl", w_rl, "reprojection weight");
    demo->add_option("--weights.sl", w_sl, "smoothness weight");
    demo->add_option("--weights.sbl", w_sbl, "boundary loss weight");
    demo->add_option("--seed", seed, "scene/texture seed");
    demo->add_option("--eps", eps, "finite-difference epsilon");
    demo->add_option("--threads", threads, "gradient worker threads (0 = auto)");
    demo->add_option("--out", out_dir, "output directory");

    // eval
    auto* eval = app.add_subcommand("eval", "depth metrics from PLT1 tensors");
    std::string pred_path, gt_path, mask_path, clamp_str = "0,80";
    bool no_median = false, no_clamp = false;
    eval->add_option("--pred", pred_path, "predicted depth (1,1,h,w)")->required();
    eval->add_option("--gt", gt_path, "ground-truth depth (1,1,h,w)")->required();
    eval->add_option("--mask", mask_path, "validity mask tensor (nonzero = valid)");
    eval->add_option("--clamp", clamp_str, "evaluation depth range lo,hi (default 0,80)");
    eval->add_flag("--no-median-scale", no_median, "disable median scaling");
    eval->add_flag("--no-clamp", no_clamp, "disable range clamping");

    // attn-viz
    auto* attn = app.add_subcommand("attn-viz", "dump a criss-cross attention map");
    std::string attn_size = "16x12", attn_pos, attn_out = "attn_out";
    int attn_channels = 16, attn_reduction = 8;
    long long attn_seed = 1;
    attn->add_option("--size", attn_size, "feature map size WxH");
    attn->add_option("--channels", attn_channels, "feature channels");
    attn->add_option("--reduction", attn_reduction, "q/k channel reduction");
    attn->add_option("--seed", attn_seed, "feature seed");
    attn->add_option("--pos", attn_pos, "anchor position u,v (default center)");
    attn->add_option("--out", attn_out, "output directory");

    auto* blocks = app.add_subcommand("blocks-shapecheck", "network block shape contracts");
    (void)blocks;

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (gradcheck->parsed()) return run_gradcheck(module);
    if (blocks->parsed()) return run_blocks_shapecheck();

    if (demo->parsed()) {
        pd_demo_config cfg;
        pd_demo_config_init(&cfg);
        if (!config_path.empty() && pd_demo_config_load(config_path.c_str(), &cfg) != PD_OK)
            return fail_runtime("loading config");
        if (!layout.empty()) {
            if (layout.size() >= sizeof cfg.layout) {
                std::fprintf(stderr, "error: unknown layout '%s'\n", layout.c_str());
                return kExitUsage;
            }
            std::snprintf(cfg.layout, sizeof cfg.layout, "%s", layout.c_str());
        }
        if (!size_str.empty() && !parse_size(size_str, &cfg.width, &cfg.height)) {
            std::fprintf(stderr, "error: --size must look like 32x24\n");
            return kExitUsage;
        }
        if (steps >= 0) cfg.steps = steps;
        if (w_rl >= 0) cfg.w_reproj = w_rl;
        if (w_sl >= 0) cfg.w_smooth = w_sl;
        if (w_sbl >= 0) cfg.w_sbl = w_sbl;
        if (seed >= 0) cfg.seed = static_cast<uint32_t>(seed);
        if (eps > 0) cfg.fd_epsilon = eps;
        if (threads >= 0) cfg.threads = threads;
        return run_demo(cfg, out_dir);
    }

    if (eval->parsed()) {
        double lo = 0.0, hi = 80.0;
        if (std::sscanf(clamp_str.c_str(), "%lf,%lf", &lo, &hi) != 2) {
            std::fprintf(stderr, "error: --clamp must look like 0,80\n");
            return kExitUsage;
        }
        return run_eval(pred_path, gt_path, mask_path, !no_median, !no_clamp, lo, hi);
    }

    if (attn->parsed()) {
        int w = 0, h = 0;
        if (!parse_size(attn_size, &w, &h)) {
            std::fprintf(stderr, "error: --size must look like 16x12\n");
            return kExitUsage;
        }
        return run_attn_viz(attn_channels, w, h, attn_reduction,
                            static_cast<uint32_t>(attn_seed), attn_pos, attn_out);
    }

    return kExitUsage;
}
