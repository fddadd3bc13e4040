#include "priordepth/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "priordepth/nn_ops.hpp"

namespace priordepth {

Tensor4 fd_gradient(const LossFn& f, const Tensor4& x, double eps, int threads) {
    if (!(eps > 0.0)) throw std::invalid_argument("fd_gradient: eps must be positive");
    const std::size_t total = x.size();
    Tensor4 grad(x.n(), x.c(), x.h(), x.w());

    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp<int>(n_threads, 1, static_cast<int>(std::max<std::size_t>(total, 1)));

    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&](std::size_t begin, std::size_t end) {
        try {
            Tensor4 local = x;
            for (std::size_t i = begin; i < end; ++i) {
                const float orig = local.values()[i];
                local.values()[i] = static_cast<float>(orig + eps);
                const double fp = f(local);
                local.values()[i] = static_cast<float>(orig - eps);
                const double fm = f(local);
                local.values()[i] = orig;
                if (!std::isfinite(fp) || !std::isfinite(fm))
                    throw std::runtime_error("fd_gradient: non-finite loss at coordinate " +
                                             std::to_string(i));
                grad.values()[i] = static_cast<float>((fp - fm) / (2.0 * eps));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };

    if (n_threads == 1) {
        work(0, total);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (total + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const std::size_t begin = t * chunk;
            if (begin >= total) break;
            pool.emplace_back(work, begin, std::min(begin + chunk, total));
        }
        for (std::thread& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return grad;
}

Tensor4 depth_patch_features(const DepthMap& depth) {
    const int H = depth.h, W = depth.w;
    Tensor4 f(1, 8, H, W);
    auto clampi = [](int v, int n) { return std::clamp(v, 0, n - 1); };
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            int c = 0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    // quarter-power contrast compression: the margin cannot
                    // saturate between adjacent patches, so the raw-depth
                    // hinge would press on the boundary band without limit;
                    // compressing keeps that pressure well below the
                    // photometric pull while preserving its direction
                    const float d = depth.at(clampi(i + di, H), clampi(j + dj, W));
                    f.at(0, c++, i, j) = std::sqrt(std::sqrt(d));
                }
        }
    return f;
}

SceneLossEvaluator::SceneLossEvaluator(const SyntheticScene& scene, const OptimConfig& cfg)
    : scene_(scene), cfg_(cfg), identity_min_(identity_error_min(scene.target, scene.sources)) {}

DepthMap SceneLossEvaluator::depth_of(const Tensor4& logits) const {
    return depth_from_sigmoid(activation(logits, Activation::Sigmoid), cfg_.d_min, cfg_.d_max);
}

LossBreakdown SceneLossEvaluator::breakdown(const Tensor4& logits) const {
    const DepthMap depth = depth_of(logits);

    const ReprojectionResult rp = reprojection_loss_with_identity(
        scene_.target, scene_.sources, depth, scene_.poses, scene_.intrinsics, identity_min_);

    Tensor4 disp(1, 1, depth.h, depth.w);
    for (int i = 0; i < depth.h; ++i)
        for (int j = 0; j < depth.w; ++j) disp.at(0, 0, i, j) = 1.0f / depth.at(i, j);
    const double smooth = cfg_.smooth_scale * smoothness_loss(disp, scene_.target);

    const double boundary = sbl(depth_patch_features(depth), scene_.semantic, cfg_.sbl);

    return total_loss(rp.loss, smooth, boundary, cfg_.weights);
}

double SceneLossEvaluator::total(const Tensor4& logits) const { return breakdown(logits).total; }

OptimResult optimize_depth(const SyntheticScene& scene, const OptimConfig& cfg) {
    if (cfg.steps < 1) throw std::invalid_argument("optimize_depth: steps must be >= 1");
    if (!(cfg.fd_epsilon > 0.0)) throw std::invalid_argument("optimize_depth: fd_epsilon must be > 0");

    const SceneLossEvaluator eval(scene, cfg);

    // logit field reproducing the starting depth through the sigmoid
    const double disp0 = 1.0 / cfg.d_max;
    const double disp1 = 1.0 / cfg.d_min;
    auto logit_of_depth = [&](double d) {
        const double s = (1.0 / d - disp0) / (disp1 - disp0);
        return static_cast<float>(std::log(s / (1.0 - s)));
    };
    Tensor4 x(1, 1, scene.target.h(), scene.target.w());
    if (cfg.init_map.empty()) {
        for (float& v : x.values()) v = logit_of_depth(cfg.init_depth);
    } else {
        if (cfg.init_map.size() != x.size())
            throw std::invalid_argument("optimize_depth: init_map size does not match the scene");
        for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] = logit_of_depth(cfg.init_map[i]);
    }

    OptimResult result;
    LossBreakdown cur = eval.breakdown(x);
    result.trajectory.push_back({0, cur.reproj, cur.smooth, cur.sbl, cur.total, true, 0.0});

    const double armijo_c = 1e-4;
    double alpha_seed = cfg.step_size;
    double eps = cfg.fd_epsilon;
    for (int step = 1; step <= cfg.steps; ++step) {
        if (!std::isfinite(cur.total))
            throw std::runtime_error("optimize_depth: divergence at step " + std::to_string(step));

        const Tensor4 g = fd_gradient([&](const Tensor4& t) { return eval.total(t); }, x, eps,
                                      cfg.threads);
        double gnorm2 = 0.0;
        for (float v : g.values()) gnorm2 += static_cast<double>(v) * v;

        bool accepted = false;
        double alpha = alpha_seed;
        Tensor4 candidate = x;
        // Per-coordinate displacement cap: a single pixel must not jump to a
        // wildly wrong depth in one step, where the auto-mask could park it
        // outside the photometric support for good.
        const double max_move = 0.25;
        for (int halving = 0; halving < 20 && gnorm2 > 0.0; ++halving) {
            double predicted = 0.0; // first-order decrease along the clamped step
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double move =
                    std::clamp(alpha * static_cast<double>(g.values()[i]), -max_move, max_move);
                candidate.values()[i] = static_cast<float>(x.values()[i] - move);
                predicted += move * g.values()[i];
            }
            const double trial = eval.total(candidate);
            if (std::isfinite(trial) && trial <= cur.total - armijo_c * predicted) {
                x = candidate;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (accepted) {
            cur = eval.breakdown(x);
            // grow as the strong pixels settle; the cap keeps the 20
            // halvings of one step spanning a useful range
            alpha_seed = std::min(alpha * 2.0, cfg.step_size * 1024.0);
        } else {
            ++result.rejected_steps;
            // The probe scale that yields descent directions narrows as the
            // iterate refines, and below ~1e-4 the auto-mask and
            // min-over-sources jumps drown the differences. Cycle through
            // the scales instead of decaying monotonically.
            eps = eps * 0.5 >= 1e-4 ? eps * 0.5 : cfg.fd_epsilon;
        }
        result.trajectory.push_back(
            {step, cur.reproj, cur.smooth, cur.sbl, cur.total, accepted, accepted ? alpha : 0.0});
    }

    result.final_logits = x;
    result.final_depth = eval.depth_of(x);
    std::vector<std::uint8_t> all_valid;
    result.metrics = eval_metrics(result.final_depth, scene.gt_depth, all_valid, EvalOptions{});
    return result;
}

double boundary_sharpness(const DepthMap& depth, const SemanticMap& semantic) {
    const int H = depth.h, W = depth.w;
    if (semantic.h != H || semantic.w != W)
        throw std::invalid_argument("boundary_sharpness: depth/semantic dims differ");

    // BFS distance (4-adjacency) to the nearest boundary pixel
    std::vector<int> dist(static_cast<std::size_t>(H) * W, -1);
    std::vector<std::size_t> queue;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            const bool boundary =
                (i + 1 < H && semantic.at(i, j) != semantic.at(i + 1, j)) ||
                (j + 1 < W && semantic.at(i, j) != semantic.at(i, j + 1)) ||
                (i > 0 && semantic.at(i, j) != semantic.at(i - 1, j)) ||
                (j > 0 && semantic.at(i, j) != semantic.at(i, j - 1));
            if (boundary) {
                dist[static_cast<std::size_t>(i) * W + j] = 0;
                queue.push_back(static_cast<std::size_t>(i) * W + j);
            }
        }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::size_t p = queue[head];
        const int i = static_cast<int>(p / W), j = static_cast<int>(p % W);
        const int d = dist[p];
        const int ni[4] = {i + 1, i - 1, i, i};
        const int nj[4] = {j, j, j + 1, j - 1};
        for (int k = 0; k < 4; ++k) {
            if (ni[k] < 0 || ni[k] >= H || nj[k] < 0 || nj[k] >= W) continue;
            const std::size_t q = static_cast<std::size_t>(ni[k]) * W + nj[k];
            if (dist[q] < 0) {
                dist[q] = d + 1;
                queue.push_back(q);
            }
        }
    }

    double sum = 0.0;
    long count = 0;
    auto visit = [&](int i0, int j0, int i1, int j1) {
        if (semantic.at(i0, j0) != semantic.at(i1, j1)) return;
        const int d0 = dist[static_cast<std::size_t>(i0) * W + j0];
        const int d1 = dist[static_cast<std::size_t>(i1) * W + j1];
        if (d0 < 0 || d1 < 0 || std::min(d0, d1) > 2) return;
        sum += std::abs(static_cast<double>(depth.at(i0, j0)) - depth.at(i1, j1));
        ++count;
    };
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            if (j + 1 < W) visit(i, j, i, j + 1);
            if (i + 1 < H) visit(i, j, i + 1, j);
        }
    return count > 0 ? sum / count : 0.0;
}

} // namespace priordepth
