#include "priordepth.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "priordepth/harness.hpp"
#include "priordepth/metrics.hpp"
#include "priordepth/tensor_io.hpp"

using namespace priordepth;

struct pd_tensor {
    Tensor4 t;
};

namespace {

thread_local std::string g_last_error;

pd_status set_error(pd_status code, const char* what) {
    g_last_error = what;
    return code;
}

// Runs fn, translating exceptions to status codes. io_failures marks entry
// points whose runtime_errors are file problems rather than internal ones.
template <typename Fn>
pd_status guarded(bool io_failures, Fn&& fn) {
    try {
        fn();
        return PD_OK;
    } catch (const std::invalid_argument& e) {
        return set_error(PD_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::runtime_error& e) {
        return set_error(io_failures ? PD_ERR_IO : PD_ERR_RUNTIME, e.what());
    } catch (const std::exception& e) {
        return set_error(PD_ERR_RUNTIME, e.what());
    }
}

pd_status require(bool ok, const char* what) {
    return ok ? PD_OK : set_error(PD_ERR_INVALID_ARGUMENT, what);
}

std::string format_report(const std::vector<CheckResult>& checks) {
    std::string out;
    for (const CheckResult& c : checks)
        out += (c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
    return out;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

pd_metric_report to_c(const MetricReport& m) {
    return {m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.delta1, m.delta2, m.delta3};
}

pd_status parse_layout(const char* name, SceneLayout* out) {
    const std::string s = name;
    if (s == "two-plane") *out = SceneLayout::TwoPlane;
    else if (s == "three-plane") *out = SceneLayout::ThreePlane;
    else if (s == "slanted") *out = SceneLayout::Slanted;
    else return set_error(PD_ERR_INVALID_ARGUMENT, "unknown layout");
    return PD_OK;
}

} // namespace

extern "C" {

const char* pd_last_error(void) { return g_last_error.c_str(); }

pd_status pd_tensor_create(uint32_t n, uint32_t c, uint32_t h, uint32_t w, const float* data,
                           pd_tensor** out) {
    if (pd_status s = require(out != nullptr, "pd_tensor_create: out is NULL")) return s;
    return guarded(false, [&] {
        Tensor4 t(static_cast<int>(n), static_cast<int>(c), static_cast<int>(h),
                  static_cast<int>(w));
        if (data) std::memcpy(t.data(), data, t.size() * sizeof(float));
        *out = new pd_tensor{std::move(t)};
    });
}

pd_status pd_tensor_read(const char* path, pd_tensor** out) {
    if (pd_status s = require(path && out, "pd_tensor_read: NULL argument")) return s;
    return guarded(true, [&] { *out = new pd_tensor{tensor_read(path)}; });
}

pd_status pd_tensor_write(const pd_tensor* t, const char* path) {
    if (pd_status s = require(t && path, "pd_tensor_write: NULL argument")) return s;
    return guarded(true, [&] { tensor_write(t->t, path); });
}

pd_status pd_tensor_write_pgm(const pd_tensor* t, const char* path) {
    if (pd_status s = require(t && path, "pd_tensor_write_pgm: NULL argument")) return s;
    return guarded(true, [&] { tensor_write_pgm(t->t, path); });
}

void pd_tensor_dims(const pd_tensor* t, uint32_t dims[4]) {
    if (!t || !dims) return;
    dims[0] = static_cast<uint32_t>(t->t.n());
    dims[1] = static_cast<uint32_t>(t->t.c());
    dims[2] = static_cast<uint32_t>(t->t.h());
    dims[3] = static_cast<uint32_t>(t->t.w());
}

const float* pd_tensor_data(const pd_tensor* t) { return t ? t->t.data() : nullptr; }

void pd_tensor_free(pd_tensor* t) { delete t; }

pd_status pd_eval_metrics(const pd_tensor* pred, const pd_tensor* gt, const pd_tensor* mask,
                          int median_scale, int clamp, double clamp_lo, double clamp_hi,
                          pd_metric_report* out) {
    if (pd_status s = require(pred && gt && out, "pd_eval_metrics: NULL argument")) return s;
    return guarded(false, [&] {
        auto as_depth = [](const Tensor4& t) {
            if (t.n() != 1 || t.c() != 1)
                throw std::invalid_argument("pd_eval_metrics: maps must be (1,1,h,w)");
            DepthMap d(t.h(), t.w());
            std::memcpy(d.values.data(), t.data(), t.size() * sizeof(float));
            return d;
        };
        const DepthMap p = as_depth(pred->t);
        const DepthMap g = as_depth(gt->t);

        std::vector<std::uint8_t> valid;
        if (mask) {
            if (mask->t.h() != p.h || mask->t.w() != p.w)
                throw std::invalid_argument("pd_eval_metrics: mask dims differ from maps");
            valid.resize(mask->t.size());
            for (std::size_t i = 0; i < valid.size(); ++i)
                valid[i] = mask->t.values()[i] != 0.0f;
        }

        EvalOptions opts;
        opts.median_scale = median_scale != 0;
        opts.clamp = clamp != 0;
        opts.clamp_lo = clamp_lo;
        opts.clamp_hi = clamp_hi;
        *out = to_c(eval_metrics(p, g, valid, opts));
    });
}

void pd_demo_config_init(pd_demo_config* cfg) {
    if (!cfg) return;
    std::strcpy(cfg->layout, "two-plane");
    cfg->width = 32;
    cfg->height = 24;
    cfg->steps = 200;
    cfg->w_reproj = 1.0;
    cfg->w_smooth = 1.0;
    cfg->w_sbl = 0.1;
    cfg->seed = 1;
    const OptimConfig defaults;
    cfg->fd_epsilon = defaults.fd_epsilon;
    cfg->step_size = defaults.step_size;
    cfg->init_depth = defaults.init_depth;
    cfg->threads = defaults.threads;
}

pd_status pd_demo_config_load(const char* path, pd_demo_config* cfg) {
    if (pd_status s = require(path && cfg, "pd_demo_config_load: NULL argument")) return s;
    return guarded(true, [&] {
        std::ifstream in(path);
        if (!in) throw std::runtime_error(std::string("cannot open config file ") + path);
        std::stringstream buf;
        buf << in.rdbuf();

        // the file starts from library defaults; keys it sets win
        DemoConfig parsed = parse_demo_config(buf.str());
        const char* layout = parsed.scene.layout == SceneLayout::TwoPlane      ? "two-plane"
                             : parsed.scene.layout == SceneLayout::ThreePlane ? "three-plane"
                                                                              : "slanted";
        std::strcpy(cfg->layout, layout);
        cfg->width = parsed.scene.width;
        cfg->height = parsed.scene.height;
        cfg->steps = parsed.optim.steps;
        cfg->w_reproj = parsed.optim.weights.reproj;
        cfg->w_smooth = parsed.optim.weights.smooth;
        cfg->w_sbl = parsed.optim.weights.sbl;
        cfg->seed = parsed.scene.texture_seed;
        cfg->fd_epsilon = parsed.optim.fd_epsilon;
        cfg->step_size = parsed.optim.step_size;
        cfg->init_depth = parsed.optim.init_depth;
        cfg->threads = parsed.optim.threads;
    });
}

pd_status pd_demo_run(const pd_demo_config* cfg, const char* out_dir, pd_demo_result* out) {
    if (pd_status s = require(cfg && out_dir, "pd_demo_run: NULL argument")) return s;
    return guarded(false, [&] {
        DemoConfig dc;
        SceneLayout layout;
        if (parse_layout(cfg->layout, &layout) != PD_OK)
            throw std::invalid_argument(g_last_error);
        dc.scene.layout = layout;
        dc.scene.width = cfg->width;
        dc.scene.height = cfg->height;
        dc.scene.texture_seed = cfg->seed;
        dc.optim.steps = cfg->steps;
        dc.optim.weights = {cfg->w_reproj, cfg->w_smooth, cfg->w_sbl};
        dc.optim.seed = cfg->seed;
        dc.optim.fd_epsilon = cfg->fd_epsilon;
        dc.optim.step_size = cfg->step_size;
        dc.optim.init_depth = cfg->init_depth;
        dc.optim.threads = cfg->threads;

        const DemoOutcome outcome = run_demo(dc, out_dir);
        if (out) {
            out->metrics = to_c(outcome.optim.metrics);
            out->initial_loss = outcome.optim.trajectory.front().total;
            out->final_loss = outcome.optim.trajectory.back().total;
            out->boundary_sharpness = outcome.sharpness;
            out->rejected_steps = outcome.optim.rejected_steps;
        }
    });
}

pd_status pd_gradcheck(const char* module, char** report, int* all_pass) {
    if (pd_status s = require(module && report, "pd_gradcheck: NULL argument")) return s;
    return guarded(false, [&] {
        const std::vector<CheckResult> checks = run_gradchecks(module);
        bool ok = true;
        for (const CheckResult& c : checks) ok = ok && c.pass;
        *report = dup_string(format_report(checks));
        if (all_pass) *all_pass = ok ? 1 : 0;
    });
}

pd_status pd_blocks_shapecheck(char** report, int* all_pass) {
    if (pd_status s = require(report != nullptr, "pd_blocks_shapecheck: NULL argument")) return s;
    return guarded(false, [&] {
        const std::vector<CheckResult> checks = run_blocks_shapecheck();
        bool ok = true;
        for (const CheckResult& c : checks) ok = ok && c.pass;
        *report = dup_string(format_report(checks));
        if (all_pass) *all_pass = ok ? 1 : 0;
    });
}

void pd_string_free(char* s) { delete[] s; }

pd_status pd_attention_map(int channels, int h, int w, int reduction, uint32_t seed,
                           pd_tensor** out) {
    if (pd_status s = require(out != nullptr, "pd_attention_map: out is NULL")) return s;
    return guarded(false,
                   [&] { *out = new pd_tensor{cpa_affinity_demo(channels, h, w, reduction, seed)}; });
}

pd_status pd_attention_place(const pd_tensor* tmap, int u, int v, pd_tensor** out) {
    if (pd_status s = require(tmap && out, "pd_attention_place: NULL argument")) return s;
    return guarded(false, [&] {
        const Tensor4& t = tmap->t;
        const int H = t.h(), W = t.w();
        if (t.c() != H + W - 1)
            throw std::invalid_argument("pd_attention_place: not an affinity map");
        if (u < 0 || u >= W || v < 0 || v >= H)
            throw std::invalid_argument("pd_attention_place: position out of range");

        // entries 0..W-1 cover row v; entries W.. cover column u minus row v
        Tensor4 img(1, 1, H, W);
        for (int j = 0; j < W; ++j) img.at(0, 0, v, j) = t.at(0, j, v, u);
        int s = W;
        for (int i = 0; i < H; ++i) {
            if (i == v) continue;
            img.at(0, 0, i, u) = t.at(0, s++, v, u);
        }
        *out = new pd_tensor{std::move(img)};
    });
}

} // extern "C"
