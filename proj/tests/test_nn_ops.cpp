#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "priordepth/nn_ops.hpp"

using namespace priordepth;

namespace {

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.values()[i]) - b.values()[i]));
    return m;
}

ConvParams random_conv(int in_c, int out_c, int k, int stride, int pad, int groups,
                       std::mt19937& rng) {
    ConvParams p;
    p.weights = random_uniform(out_c, in_c / groups, k, k, -1.0f, 1.0f, rng);
    p.bias.resize(out_c);
    std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
    for (float& b : p.bias) b = dist(rng);
    p.stride = stride;
    p.padding = pad;
    p.groups = groups;
    return p;
}

} // namespace

TEST_CASE("conv2d identity kernel") {
    Tensor4 x(1, 1, 1, 1, {3.5f});
    ConvParams p;
    p.weights = Tensor4(1, 1, 1, 1, {1.0f});
    p.bias = {0.0f};
    const Tensor4 y = conv2d(x, p);
    CHECK(y.at(0, 0, 0, 0) == 3.5f);
}

TEST_CASE("conv2d all-ones 3x3 sums to 9") {
    Tensor4 x = Tensor4::full(1, 1, 3, 3, 1.0f);
    ConvParams p;
    p.weights = Tensor4::full(1, 1, 3, 3, 1.0f);
    p.bias = {0.0f};
    const Tensor4 y = conv2d(x, p);
    REQUIRE(y.h() == 1);
    REQUIRE(y.w() == 1);
    CHECK(y.at(0, 0, 0, 0) == 9.0f);
}

TEST_CASE("conv2d grouped depthwise matches the naive reference") {
    std::mt19937 rng(17);
    const Tensor4 x = random_uniform(1, 2, 4, 4, -1.0f, 1.0f, rng);
    const ConvParams p = random_conv(2, 2, 3, 1, 1, 2, rng);
    CHECK(max_abs_diff(conv2d(x, p), oracle::conv2d_naive(x, p)) < 1e-6);
}

TEST_CASE("conv2d equals the naive reference on randomized shapes") {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> dn(1, 2), dc(1, 4), dhw(3, 8), dk(1, 3), ds(1, 2),
        dp(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = dn(rng), h = dhw(rng), w = dhw(rng);
        int in_c = dc(rng);
        const int k = std::min({dk(rng), h, w});
        // groups must divide both channel counts
        const int groups = (in_c % 2 == 0 && trial % 3 == 0) ? 2 : 1;
        int out_c = dc(rng) * groups;
        const ConvParams p = random_conv(in_c, out_c, k, ds(rng), dp(rng), groups, rng);
        const Tensor4 x = random_uniform(n, in_c, h, w, -2.0f, 2.0f, rng);
        CHECK(max_abs_diff(conv2d(x, p), oracle::conv2d_naive(x, p)) < 1e-5);
    }
}

TEST_CASE("conv2d rejects mismatched channels") {
    std::mt19937 rng(1);
    const Tensor4 x = random_uniform(1, 3, 4, 4, -1.0f, 1.0f, rng);
    const ConvParams p = random_conv(2, 2, 3, 1, 1, 1, rng);
    CHECK_THROWS_AS(conv2d(x, p), std::invalid_argument);
}

TEST_CASE("hardswish hits its breakpoints") {
    Tensor4 x(1, 1, 1, 4, {0.0f, 3.0f, -3.0f, 1.0f});
    const Tensor4 y = activation(x, Activation::HardSwish);
    CHECK(y.values()[0] == 0.0f);
    CHECK(y.values()[1] == 3.0f);
    CHECK(y.values()[2] == 0.0f);
    CHECK(y.values()[3] == doctest::Approx(4.0 / 6.0).epsilon(1e-6));
}

TEST_CASE("sigmoid and elu basics") {
    Tensor4 x(1, 1, 1, 2, {0.0f, -1.0f});
    const Tensor4 sig = activation(x, Activation::Sigmoid);
    const Tensor4 elu = activation(x, Activation::Elu);
    CHECK(sig.values()[0] == 0.5f);
    CHECK(elu.values()[1] == doctest::Approx(std::expm1(-1.0)).epsilon(1e-6));
    CHECK(elu.values()[0] == 0.0f);
}

TEST_CASE("batch_norm degenerate and fixed-gain cases") {
    BatchNormParams p;
    p.gamma = {1.0f};
    p.beta = {0.0f};

    const Tensor4 constant = Tensor4::full(1, 1, 2, 2, 7.0f);
    const Tensor4 zeroed = batch_norm(constant, p);
    for (float v : zeroed.values()) CHECK(v == 0.0f);

    p.gamma = {0.0f};
    p.beta = {5.0f};
    const Tensor4 beta_only = batch_norm(constant, p);
    for (float v : beta_only.values()) CHECK(v == 5.0f);
}

TEST_CASE("batch_norm matches hand-computed statistics") {
    Tensor4 x(1, 1, 2, 2, {1.0f, 2.0f, 3.0f, 6.0f});
    BatchNormParams p;
    p.gamma = {2.0f};
    p.beta = {1.0f};
    const double mean = 3.0;
    const double var = (4.0 + 1.0 + 0.0 + 9.0) / 4.0;
    const Tensor4 y = batch_norm(x, p);
    for (int i = 0; i < 4; ++i) {
        const double expect = (x.values()[i] - mean) / std::sqrt(var + 1e-5) * 2.0 + 1.0;
        CHECK(y.values()[i] == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("batch_norm standardizes random channels") {
    std::mt19937 rng(5);
    const Tensor4 x = random_uniform(2, 3, 6, 6, -4.0f, 4.0f, rng);
    BatchNormParams p;
    p.gamma.assign(3, 1.0f);
    p.beta.assign(3, 0.0f);
    const Tensor4 y = batch_norm(x, p);
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        for (int n = 0; n < 2; ++n)
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) mean += y.at(n, c, i, j);
        mean /= 72.0;
        for (int n = 0; n < 2; ++n)
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) var += (y.at(n, c, i, j) - mean) * (y.at(n, c, i, j) - mean);
        var /= 72.0;
        CHECK(std::abs(mean) < 1e-5);
        CHECK(std::abs(var - 1.0) < 1e-4);
    }
}

TEST_CASE("batch_norm running-statistics mode") {
    Tensor4 x(1, 1, 1, 2, {3.0f, 5.0f});
    BatchNormParams p;
    p.gamma = {1.0f};
    p.beta = {0.0f};
    p.use_running_stats = true;
    p.running_mean = {1.0f};
    p.running_var = {4.0f};
    const Tensor4 y = batch_norm(x, p);
    CHECK(y.values()[0] == doctest::Approx((3.0 - 1.0) / std::sqrt(4.0 + 1e-5)).epsilon(1e-6));
}

TEST_CASE("softmax uniform, closed form, and shift invariance") {
    Tensor4 x(1, 1, 1, 4, {2.0f, 2.0f, 2.0f, 2.0f});
    const Tensor4 uniform = softmax(x, 3);
    for (float v : uniform.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-7));

    Tensor4 pair(1, 1, 1, 2, {0.0f, std::log(3.0f)});
    const Tensor4 sm = softmax(pair, 3);
    CHECK(sm.values()[0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(sm.values()[1] == doctest::Approx(0.75).epsilon(1e-6));

    // inputs on a 2^-14 grid so the +100 shift is exact in f32
    std::mt19937 rng(2);
    Tensor4 r = random_uniform(1, 3, 2, 5, -2.0f, 2.0f, rng);
    for (float& v : r.values()) v = std::round(v * 16384.0f) / 16384.0f;
    Tensor4 shifted = r;
    for (float& v : shifted.values()) v += 100.0f;
    const Tensor4 a = softmax(r, 1), b = softmax(shifted, 1);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(a.values()[i] - b.values()[i]) < 1e-6);
}

TEST_CASE("softmax slices sum to one on every axis") {
    std::mt19937 rng(8);
    const Tensor4 x = random_uniform(2, 3, 4, 5, -3.0f, 3.0f, rng);
    for (int axis = 0; axis < 4; ++axis) {
        const Tensor4 y = softmax(x, axis);
        const int dims[4] = {x.n(), x.c(), x.h(), x.w()};
        // sum along the axis for a handful of random slices
        std::uniform_int_distribution<int> pick(0, 1000);
        for (int rep = 0; rep < 10; ++rep) {
            int idx[4] = {pick(rng) % dims[0], pick(rng) % dims[1], pick(rng) % dims[2],
                          pick(rng) % dims[3]};
            double sum = 0.0;
            for (int k = 0; k < dims[axis]; ++k) {
                idx[axis] = k;
                sum += y.at(idx[0], idx[1], idx[2], idx[3]);
            }
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("global_avg_pool basics") {
    CHECK(global_avg_pool(Tensor4::full(1, 1, 3, 3, 7.0f)).at(0, 0, 0, 0) == 7.0f);
    Tensor4 x(1, 1, 2, 2, {1.0f, 2.0f, 3.0f, 4.0f});
    CHECK(global_avg_pool(x).at(0, 0, 0, 0) == 2.5f);
    CHECK(global_avg_pool(Tensor4(1, 2, 3, 3)).at(0, 1, 0, 0) == 0.0f);
}

TEST_CASE("bilinear_resize identity and constants") {
    std::mt19937 rng(4);
    const Tensor4 x = random_uniform(1, 2, 5, 6, -1.0f, 1.0f, rng);
    const Tensor4 same = bilinear_resize(x, 5, 6);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(same.values()[i] == x.values()[i]);

    const Tensor4 c = bilinear_resize(Tensor4::full(1, 1, 3, 3, 2.5f), 7, 9);
    for (float v : c.values()) CHECK(v == doctest::Approx(2.5).epsilon(1e-7));
}

TEST_CASE("bilinear_resize 2x2 to 4x4 matches hand interpolation") {
    Tensor4 x(1, 1, 2, 2, {0.0f, 1.0f, 2.0f, 3.0f});
    const Tensor4 y = bilinear_resize(x, 4, 4);
    // align-corners-false: src = (dst + 0.5)/2 - 0.5, clamped to [0, 1]
    auto expect = [&](int i, int j) {
        const double fy = std::clamp((i + 0.5) * 0.5 - 0.5, 0.0, 1.0);
        const double fx = std::clamp((j + 0.5) * 0.5 - 0.5, 0.0, 1.0);
        const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
        const int y1 = std::min(y0 + 1, 1), x1 = std::min(x0 + 1, 1);
        const double wy = fy - y0, wx = fx - x0;
        const double top = x.at(0, 0, y0, x0) * (1 - wx) + x.at(0, 0, y0, x1) * wx;
        const double bot = x.at(0, 0, y1, x0) * (1 - wx) + x.at(0, 0, y1, x1) * wx;
        return top * (1 - wy) + bot * wy;
    };
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(y.at(0, 0, i, j) == doctest::Approx(expect(i, j)).epsilon(1e-6));
}

TEST_CASE("kernels keep finite inputs finite") {
    std::mt19937 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor4 x = random_uniform(1, 4, 6, 6, -50.0f, 50.0f, rng);
        const ConvParams p = random_conv(4, 4, 3, 1, 1, 1, rng);
        CHECK(conv2d(x, p).all_finite());
        CHECK(activation(x, Activation::Sigmoid).all_finite());
        CHECK(activation(x, Activation::HardSwish).all_finite());
        CHECK(activation(x, Activation::Elu).all_finite());
        CHECK(softmax(x, 1).all_finite());
        CHECK(bilinear_resize(x, 9, 4).all_finite());
    }
}
