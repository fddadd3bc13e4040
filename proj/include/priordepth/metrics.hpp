#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "priordepth/geometry.hpp"

namespace priordepth {

// The seven standard depth-evaluation numbers.
struct MetricReport {
    double abs_rel = 0.0;
    double sq_rel = 0.0;
    double rmse = 0.0;
    double rmse_log = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;

    std::string csv_header() const;
    std::string csv_row() const;
};

struct EvalOptions {
    bool median_scale = true; // scale pred by median(gt)/median(pred) first
    bool clamp = true;        // clamp both pred and gt to [clamp_lo, clamp_hi]
    double clamp_lo = 0.0;
    double clamp_hi = 80.0;
};

// Computes all seven metrics over the masked pixels. Threshold accuracies
// use strict comparison max(d/d*, d*/d) < 1.25^k. An empty mask is allowed
// to mean "all pixels valid"; throws if no pixel is valid or the ground
// truth is nonpositive on a valid pixel.
MetricReport eval_metrics(const DepthMap& pred, const DepthMap& gt,
                          const std::vector<std::uint8_t>& valid_mask, const EvalOptions& opts);

} // namespace priordepth
