#include "priordepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace priordepth {

namespace {

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double m = v[n / 2];
    if (n % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.begin() + n / 2);
        m = 0.5 * (m + v[n / 2 - 1]);
    }
    return m;
}

} // namespace

std::string MetricReport::csv_header() const {
    return "abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3";
}

std::string MetricReport::csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", abs_rel, sq_rel, rmse,
                  rmse_log, delta1, delta2, delta3);
    return buf;
}

MetricReport eval_metrics(const DepthMap& pred, const DepthMap& gt,
                          const std::vector<std::uint8_t>& valid_mask, const EvalOptions& opts) {
    if (pred.h != gt.h || pred.w != gt.w)
        throw std::invalid_argument("eval_metrics: pred/gt shapes differ");
    const std::size_t total = static_cast<std::size_t>(gt.h) * gt.w;
    if (!valid_mask.empty() && valid_mask.size() != total)
        throw std::invalid_argument("eval_metrics: mask size does not match maps");

    std::vector<double> d, dstar;
    d.reserve(total);
    dstar.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        if (!valid_mask.empty() && !valid_mask[i]) continue;
        const double g = gt.values[i];
        if (!(g > 0.0)) throw std::invalid_argument("eval_metrics: nonpositive ground truth in mask");
        d.push_back(pred.values[i]);
        dstar.push_back(g);
    }
    if (d.empty()) throw std::invalid_argument("eval_metrics: empty valid mask");

    if (opts.median_scale) {
        const double scale = median(dstar) / median(d);
        for (double& v : d) v *= scale;
    }
    if (opts.clamp) {
        for (double& v : d) v = std::clamp(v, opts.clamp_lo, opts.clamp_hi);
        for (double& v : dstar) v = std::clamp(v, opts.clamp_lo, opts.clamp_hi);
    }

    MetricReport r;
    const double inv = 1.0 / static_cast<double>(d.size());
    double se = 0.0, se_log = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double diff = d[i] - dstar[i];
        r.abs_rel += std::abs(diff) / dstar[i];
        r.sq_rel += diff * diff / dstar[i];
        se += diff * diff;
        const double dl = std::log(d[i]) - std::log(dstar[i]);
        se_log += dl * dl;
        const double ratio = std::max(d[i] / dstar[i], dstar[i] / d[i]);
        if (ratio < 1.25) r.delta1 += 1.0;
        if (ratio < 1.25 * 1.25) r.delta2 += 1.0;
        if (ratio < 1.25 * 1.25 * 1.25) r.delta3 += 1.0;
    }
    r.abs_rel *= inv;
    r.sq_rel *= inv;
    r.rmse = std::sqrt(se * inv);
    r.rmse_log = std::sqrt(se_log * inv);
    r.delta1 *= inv;
    r.delta2 *= inv;
    r.delta3 *= inv;
    return r;
}

} // namespace priordepth
