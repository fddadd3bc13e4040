#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "priordepth/metrics.hpp"

using namespace priordepth;

namespace {

DepthMap map_of(std::initializer_list<float> vals, int h, int w) {
    DepthMap d(h, w);
    std::copy(vals.begin(), vals.end(), d.values.begin());
    return d;
}

const std::vector<std::uint8_t> kAllValid;

} // namespace

TEST_CASE("perfect prediction scores (0,0,0,0,1,1,1)") {
    std::mt19937 rng(1);
    DepthMap gt(6, 8);
    std::uniform_real_distribution<float> dist(0.5f, 60.0f);
    for (float& v : gt.values) v = dist(rng);
    EvalOptions opts;
    opts.median_scale = false;
    const MetricReport r = eval_metrics(gt, gt, kAllValid, opts);
    CHECK(r.abs_rel == 0.0);
    CHECK(r.sq_rel == 0.0);
    CHECK(r.rmse == 0.0);
    CHECK(r.rmse_log == 0.0);
    CHECK(r.delta1 == 1.0);
    CHECK(r.delta2 == 1.0);
    CHECK(r.delta3 == 1.0);
}

TEST_CASE("uniform 1.25x error sits exactly on the strict threshold") {
    DepthMap gt = map_of({2.0f, 4.0f, 8.0f, 16.0f}, 2, 2);
    DepthMap pred = gt;
    for (float& v : pred.values) v *= 1.25f;
    EvalOptions opts;
    opts.median_scale = false;
    const MetricReport r = eval_metrics(pred, gt, kAllValid, opts);
    CHECK(r.abs_rel == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(r.delta1 == 0.0); // strict <: the ratio is exactly 1.25
    CHECK(r.delta2 == 1.0);
    CHECK(r.delta3 == 1.0);
}

TEST_CASE("four-pixel hand case") {
    DepthMap gt = map_of({1.0f, 2.0f, 4.0f, 8.0f}, 2, 2);
    DepthMap pred = map_of({1.0f, 1.0f, 4.0f, 10.0f}, 2, 2);
    EvalOptions opts;
    opts.median_scale = false;
    const MetricReport r = eval_metrics(pred, gt, kAllValid, opts);
    CHECK(r.abs_rel == 0.1875); // (0 + 0.5 + 0 + 0.25) / 4, exact in binary

    const oracle::MetricsOracle m =
        oracle::metrics_naive({1, 1, 4, 10}, {1, 2, 4, 8}, false, true, 0.0, 80.0);
    CHECK(r.sq_rel == doctest::Approx(m.sq_rel).epsilon(1e-9));
    CHECK(r.rmse == doctest::Approx(m.rmse).epsilon(1e-9));
    CHECK(r.rmse_log == doctest::Approx(m.rmse_log).epsilon(1e-9));
    CHECK(r.delta1 == m.d1);
    CHECK(r.delta2 == m.d2);
    CHECK(r.delta3 == m.d3);
}

TEST_CASE("median scaling cancels a global factor of two") {
    std::mt19937 rng(2);
    DepthMap gt(5, 5);
    std::uniform_real_distribution<float> dist(1.0f, 40.0f);
    for (float& v : gt.values) v = dist(rng);
    DepthMap pred = gt;
    for (float& v : pred.values) v *= 2.0f;
    const MetricReport r = eval_metrics(pred, gt, kAllValid, EvalOptions{});
    CHECK(r.abs_rel < 1e-7);
    CHECK(r.delta1 == 1.0);
}

TEST_CASE("median-scaled metrics are invariant to any positive rescaling") {
    std::mt19937 rng(3);
    DepthMap gt(7, 9), pred(7, 9);
    std::uniform_real_distribution<float> dist(1.0f, 40.0f);
    for (float& v : gt.values) v = dist(rng);
    for (std::size_t i = 0; i < pred.values.size(); ++i)
        pred.values[i] = gt.values[i] * (1.0f + 0.2f * dist(rng) / 40.0f);

    EvalOptions opts;
    opts.clamp = false; // exactness claim holds only without clamping
    const MetricReport base = eval_metrics(pred, gt, kAllValid, opts);
    for (float c : {0.1f, 3.0f, 100.0f}) {
        DepthMap scaled = pred;
        for (float& v : scaled.values) v *= c;
        const MetricReport r = eval_metrics(scaled, gt, kAllValid, opts);
        CHECK(r.abs_rel == doctest::Approx(base.abs_rel).epsilon(1e-6));
        CHECK(r.rmse == doctest::Approx(base.rmse).epsilon(1e-6));
        CHECK(r.rmse_log == doctest::Approx(base.rmse_log).epsilon(1e-6));
        CHECK(r.delta1 == base.delta1);
    }
}

TEST_CASE("rmse is zero only for a perfect prediction") {
    DepthMap gt = map_of({1.0f, 2.0f, 3.0f, 4.0f}, 2, 2);
    DepthMap off = gt;
    off.values[2] += 0.25f;
    EvalOptions opts;
    opts.median_scale = false;
    CHECK(eval_metrics(gt, gt, kAllValid, opts).rmse == 0.0);
    CHECK(eval_metrics(off, gt, kAllValid, opts).rmse > 0.0);
}

TEST_CASE("masking restricts the evaluation support") {
    DepthMap gt = map_of({1.0f, 2.0f, 4.0f, 8.0f}, 2, 2);
    DepthMap pred = map_of({1.0f, 99.0f, 4.0f, 8.0f}, 2, 2);
    const std::vector<std::uint8_t> mask{1, 0, 1, 1};
    EvalOptions opts;
    opts.median_scale = false;
    const MetricReport r = eval_metrics(pred, gt, mask, opts);
    CHECK(r.abs_rel == 0.0); // the bad pixel is masked out
    CHECK_THROWS_AS(eval_metrics(pred, gt, std::vector<std::uint8_t>(4, 0), opts),
                    std::invalid_argument);
}

TEST_CASE("nonpositive ground truth under the mask is rejected") {
    DepthMap gt = map_of({1.0f, 0.0f, 4.0f, 8.0f}, 2, 2);
    DepthMap pred = map_of({1.0f, 1.0f, 4.0f, 8.0f}, 2, 2);
    CHECK_THROWS_AS(eval_metrics(pred, gt, kAllValid, EvalOptions{}), std::invalid_argument);
    const std::vector<std::uint8_t> mask{1, 0, 1, 1};
    CHECK_NOTHROW(eval_metrics(pred, gt, mask, EvalOptions{}));
}

TEST_CASE("clamping caps both maps at the range limits") {
    DepthMap gt = map_of({10.0f, 120.0f, 40.0f, 70.0f}, 2, 2);
    DepthMap pred = map_of({10.0f, 200.0f, 40.0f, 70.0f}, 2, 2);
    EvalOptions opts;
    opts.median_scale = false;
    const MetricReport r = eval_metrics(pred, gt, kAllValid, opts);
    CHECK(r.abs_rel == 0.0); // both clamp to 80 at the hot pixel
}

TEST_CASE("metrics match the scalar loop oracle on random instances") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> depth(0.5, 90.0);
    std::uniform_int_distribution<int> flags(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 16 + trial % 17;
        std::vector<double> gt(n), pred(n);
        for (int i = 0; i < n; ++i) {
            gt[i] = depth(rng);
            pred[i] = depth(rng);
        }
        const bool med = flags(rng), clamp = flags(rng);

        DepthMap g(1, n), p(1, n);
        for (int i = 0; i < n; ++i) {
            g.values[i] = static_cast<float>(gt[i]);
            p.values[i] = static_cast<float>(pred[i]);
            // evaluate the oracle on the f32-rounded values the library sees
            gt[i] = g.values[i];
            pred[i] = p.values[i];
        }
        EvalOptions opts;
        opts.median_scale = med;
        opts.clamp = clamp;
        const MetricReport r = eval_metrics(p, g, kAllValid, opts);
        const oracle::MetricsOracle m = oracle::metrics_naive(pred, gt, med, clamp, 0.0, 80.0);

        CHECK(r.abs_rel == doctest::Approx(m.abs_rel).epsilon(1e-6));
        CHECK(r.sq_rel == doctest::Approx(m.sq_rel).epsilon(1e-6));
        CHECK(r.rmse == doctest::Approx(m.rmse).epsilon(1e-6));
        CHECK(r.rmse_log == doctest::Approx(m.rmse_log).epsilon(1e-6));
        CHECK(r.delta1 == doctest::Approx(m.d1).epsilon(1e-9));
        CHECK(r.delta2 == doctest::Approx(m.d2).epsilon(1e-9));
        CHECK(r.delta3 == doctest::Approx(m.d3).epsilon(1e-9));
    }
}

TEST_CASE("report invariants hold on random inputs") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> depth(0.5f, 90.0f);
    for (int trial = 0; trial < 20; ++trial) {
        DepthMap g(4, 4), p(4, 4);
        for (int i = 0; i < 16; ++i) {
            g.values[i] = depth(rng);
            p.values[i] = depth(rng);
        }
        const MetricReport r = eval_metrics(p, g, kAllValid, EvalOptions{});
        CHECK(r.abs_rel >= 0.0);
        CHECK(r.sq_rel >= 0.0);
        CHECK(r.rmse >= 0.0);
        CHECK(r.rmse_log >= 0.0);
        CHECK(r.delta1 <= r.delta2);
        CHECK(r.delta2 <= r.delta3);
        CHECK(r.delta3 <= 1.0);
        CHECK(r.delta1 >= 0.0);
    }
}

TEST_CASE("csv row carries all seven numbers") {
    MetricReport r;
    r.abs_rel = 0.1875;
    CHECK(r.csv_header() == "abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3");
    CHECK(r.csv_row().substr(0, 6) == "0.1875");
}
