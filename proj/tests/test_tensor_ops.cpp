#include <catch2/catch_amalgamated.hpp>

#include "craft/kernels.hpp"
#include "support/test_util.hpp"

using namespace craft;
using testutil::naive_conv2d;
using testutil::rand_tensor;

static void require_close(const Tensor& got, const Tensor& want, double tol) {
    REQUIRE(got.shape == want.shape);
    REQUIRE(max_abs_diff(got, want) < tol);
}

TEST_CASE("conv2d all-ones kernel on small maps") {
    Tensor ones({1, 1, 4, 4}, 1.f);
    Tensor w({1, 1, 3, 3}, 1.f);
    Tensor out = ops::conv2d(ones, w, Tensor{}, {1, 1, 1});
    // interior positions see a full 3x3 window
    CHECK(out.at(0, 0, 1, 1) == 9.0f);
    CHECK(out.at(0, 0, 1, 2) == 9.0f);
    CHECK(out.at(0, 0, 0, 0) == 4.0f);
    CHECK(out.at(0, 0, 0, 1) == 6.0f);

    Tensor ramp({1, 1, 4, 4});
    for (int i = 0; i < 16; ++i) ramp.data[size_t(i)] = float(i);
    Tensor got = ops::conv2d(ramp, w, Tensor{}, {1, 1, 1});
    // frozen from the direct double-loop evaluation
    const float want[16] = {10, 18, 24, 18, 27, 45, 54, 39, 51, 81, 90, 63, 42, 66, 72, 50};
    for (int i = 0; i < 16; ++i) CHECK(got.data[size_t(i)] == want[i]);
    require_close(got, naive_conv2d(ramp, w, Tensor{}, 1, 1, 1), 1e-6);
}

TEST_CASE("conv2d matches the direct-loop reference") {
    RngStream rng(42, "conv-oracle");
    struct Cfg {
        int64_t N, C, H, W, O, k, stride, pad, groups;
    };
    const Cfg cfgs[] = {
        {2, 3, 7, 9, 4, 3, 1, 1, 1}, {1, 8, 6, 6, 8, 1, 1, 0, 1},  {1, 6, 8, 8, 6, 3, 1, 1, 6},
        {2, 4, 9, 7, 6, 3, 2, 1, 2}, {1, 5, 11, 5, 7, 5, 1, 2, 1},
    };
    for (const auto& c : cfgs) {
        Tensor x = rand_tensor({c.N, c.C, c.H, c.W}, rng);
        Tensor w = rand_tensor({c.O, c.C / c.groups, c.k, c.k}, rng);
        Tensor b = rand_tensor({c.O}, rng);
        Tensor got = ops::conv2d(x, w, b, {c.stride, c.pad, c.groups});
        Tensor want = naive_conv2d(x, w, b, c.stride, c.pad, c.groups);
        require_close(got, want, 1e-4);
    }
}

TEST_CASE("conv2d is additive in its input") {
    RngStream rng(7, "conv-linear");
    Tensor a = rand_tensor({1, 3, 8, 8}, rng), b = rand_tensor({1, 3, 8, 8}, rng);
    Tensor w = rand_tensor({5, 3, 3, 3}, rng);
    Tensor lhs = ops::conv2d(ops::add(a, b), w, Tensor{}, {1, 1, 1});
    Tensor rhs = ops::add(ops::conv2d(a, w, Tensor{}, {1, 1, 1}), ops::conv2d(b, w, Tensor{}, {1, 1, 1}));
    require_close(lhs, rhs, 1e-4);
}

TEST_CASE("conv2d rejects inconsistent shapes") {
    Tensor x({1, 3, 8, 8});
    Tensor w({4, 2, 3, 3});
    CHECK_THROWS_AS(ops::conv2d(x, w, Tensor{}, {1, 1, 1}), std::invalid_argument);
    Tensor w2({4, 3, 3, 3});
    Tensor bad_bias({5});
    CHECK_THROWS_AS(ops::conv2d(x, w2, bad_bias, {1, 1, 1}), std::invalid_argument);
    Tensor tiny({1, 3, 2, 2});
    CHECK_THROWS_AS(ops::conv2d(tiny, w2, Tensor{}, {1, 0, 1}), std::invalid_argument);
}

TEST_CASE("max_pool2d 3x3 stride 1 pad 1") {
    // constant map is preserved: padding behaves like -inf, never wins
    Tensor c({1, 2, 5, 5}, -5.f);
    auto r = ops::max_pool2d(c, 3, 1, 1);
    REQUIRE(r.out.shape == c.shape);
    for (float v : r.out.data) CHECK(v == -5.f);

    RngStream rng(3, "pool");
    Tensor x = rand_tensor({2, 3, 6, 7}, rng);
    auto p = ops::max_pool2d(x, 3, 1, 1);
    for (int64_t n = 0; n < 2; ++n)
        for (int64_t ch = 0; ch < 3; ++ch)
            for (int64_t y = 0; y < 6; ++y)
                for (int64_t w = 0; w < 7; ++w) {
                    float want = -1e30f;
                    for (int64_t dy = -1; dy <= 1; ++dy)
                        for (int64_t dx = -1; dx <= 1; ++dx) {
                            int64_t iy = y + dy, ix = w + dx;
                            if (iy < 0 || iy >= 6 || ix < 0 || ix >= 7) continue;
                            want = std::max(want, x.at(n, ch, iy, ix));
                        }
                    CHECK(p.out.at(n, ch, y, w) == want);
                }
    Tensor tiny({1, 1, 2, 2});
    CHECK_THROWS_AS(ops::max_pool2d(tiny, 5, 1, 1), std::invalid_argument);
}

TEST_CASE("softmax pinned values and properties") {
    Tensor x({1, 2});
    x.data = {0.f, std::log(3.f)};
    Tensor y = ops::softmax(x, 1);
    CHECK(y.data[0] == Catch::Approx(0.25).margin(1e-6));
    CHECK(y.data[1] == Catch::Approx(0.75).margin(1e-6));

    RngStream rng(11, "softmax");
    Tensor a({4, 3, 5});
    for (auto& v : a.data) v = float(rng.uniform_int(-8, 8)) * 0.25f;  // exactly representable
    Tensor s = ops::softmax(a, 2);
    for (int64_t b = 0; b < 4; ++b)
        for (int64_t r = 0; r < 3; ++r) {
            double sum = 0;
            for (int64_t c = 0; c < 5; ++c) sum += s.at(b, r, c);
            CHECK(sum == Catch::Approx(1.0).margin(1e-6));
        }
    // shift invariance, exact when the shift stays exactly representable
    Tensor shifted = a;
    for (auto& v : shifted.data) v += 2.0f;
    Tensor s2 = ops::softmax(shifted, 2);
    CHECK(max_abs_diff(s, s2) == 0.0);
}

TEST_CASE("layer_norm normalizes each token over channels") {
    RngStream rng(5, "ln");
    Tensor x = rand_tensor({2, 8, 3, 4}, rng, -2.0, 3.0);
    Tensor gamma({8}, 1.f), beta({8}, 0.f);
    auto r = ops::layer_norm(x, gamma, beta);
    for (int64_t n = 0; n < 2; ++n)
        for (int64_t t = 0; t < 12; ++t) {
            double mu = 0, var = 0;
            for (int64_t c = 0; c < 8; ++c) mu += r.out.at(n, c, t / 4, t % 4);
            mu /= 8;
            for (int64_t c = 0; c < 8; ++c) {
                double d = r.out.at(n, c, t / 4, t % 4) - mu;
                var += d * d;
            }
            var /= 8;
            CHECK(std::abs(mu) < 1e-5);
            CHECK(std::abs(var - 1.0) < 1e-4);
        }
    // affine parameters scale and shift per channel
    Tensor g2({8}), b2({8});
    for (int i = 0; i < 8; ++i) {
        g2.data[size_t(i)] = float(i + 1);
        b2.data[size_t(i)] = float(10 * i);
    }
    auto r2 = ops::layer_norm(x, g2, b2);
    for (int64_t c = 0; c < 8; ++c) {
        double want = double(g2.data[size_t(c)]) * r.out.at(0, c, 1, 2) + b2.data[size_t(c)];
        CHECK(r2.out.at(0, c, 1, 2) == Catch::Approx(want).margin(1e-4));
    }
}

TEST_CASE("gelu matches the erf form") {
    Tensor x({7});
    x.data = {-6.f, -2.f, -0.5f, 0.f, 0.5f, 2.f, 6.f};
    Tensor y = ops::gelu(x);
    CHECK(y.data[3] == 0.0f);
    for (int i = 0; i < 7; ++i) {
        double v = x.data[size_t(i)];
        double want = v * 0.5 * (1.0 + std::erf(v / std::sqrt(2.0)));
        CHECK(double(y.data[size_t(i)]) == Catch::Approx(want).margin(1e-7));
    }
    CHECK(y.data[0] == Catch::Approx(0.0).margin(1e-7));   // strongly negative saturates to 0
    CHECK(y.data[6] == Catch::Approx(6.0).margin(1e-7));   // strongly positive is identity
}

TEST_CASE("pixel_shuffle index mapping and exact inverse") {
    int64_t r = 2, N = 2, C = 3, H = 3, W = 4;
    RngStream rng(9, "shuffle");
    Tensor x = rand_tensor({N, C * r * r, H, W}, rng);
    Tensor y = ops::pixel_shuffle(x, r);
    REQUIRE(y.shape == std::vector<int64_t>{N, C, H * r, W * r});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t h = 0; h < H; ++h)
                for (int64_t w = 0; w < W; ++w)
                    for (int64_t dy = 0; dy < r; ++dy)
                        for (int64_t dx = 0; dx < r; ++dx)
                            CHECK(y.at(n, c, h * r + dy, w * r + dx) == x.at(n, c * r * r + dy * r + dx, h, w));
    Tensor back = ops::pixel_unshuffle(y, r);
    REQUIRE(back.shape == x.shape);
    CHECK(max_abs_diff(back, x) == 0.0);
}

TEST_CASE("bicubic_resize identities and reference") {
    RngStream rng(13, "bicubic");
    Tensor x = rand_tensor({1, 2, 6, 6}, rng, 0.0, 1.0);
    Tensor same = ops::bicubic_resize(x, 6, 6);
    CHECK(max_abs_diff(same, x) < 1e-6);

    Tensor c({1, 1, 5, 7}, 0.731f);
    Tensor up = ops::bicubic_resize(c, 11, 17);
    for (float v : up.data) CHECK(v == Catch::Approx(0.731f).margin(1e-6));

    // non-separable 2-D double reference on an 8x8 ramp downscaled by 2
    Tensor ramp({1, 1, 8, 8});
    for (int i = 0; i < 64; ++i) ramp.data[size_t(i)] = float(i) / 63.f;
    Tensor got = ops::bicubic_resize(ramp, 4, 4);
    auto taps = [](int64_t in, int64_t out, int64_t o) {
        double src = (double(o) + 0.5) * double(in) / double(out) - 0.5;
        int64_t base = int64_t(std::floor(src)) - 1;
        std::array<double, 4> w{};
        double s = 0;
        for (int j = 0; j < 4; ++j) {
            double t = std::abs(src - double(base + j));
            double a = -0.5;
            w[size_t(j)] = t <= 1 ? (a + 2) * t * t * t - (a + 3) * t * t + 1
                                  : (t < 2 ? a * t * t * t - 5 * a * t * t + 8 * a * t - 4 * a : 0.0);
            s += w[size_t(j)];
        }
        for (auto& v : w) v /= s;
        return std::pair<int64_t, std::array<double, 4>>(base, w);
    };
    for (int64_t oy = 0; oy < 4; ++oy)
        for (int64_t ox = 0; ox < 4; ++ox) {
            auto [by, wy] = taps(8, 4, oy);
            auto [bx, wx] = taps(8, 4, ox);
            double acc = 0;
            for (int j = 0; j < 4; ++j)
                for (int i = 0; i < 4; ++i) {
                    int64_t iy = std::clamp<int64_t>(by + j, 0, 7);
                    int64_t ix = std::clamp<int64_t>(bx + i, 0, 7);
                    acc += wy[size_t(j)] * wx[size_t(i)] * double(ramp.at(0, 0, iy, ix));
                }
            CHECK(double(got.at(0, 0, oy, ox)) == Catch::Approx(acc).margin(1e-6));
        }
}

TEST_CASE("mean_filter box semantics with replicate padding") {
    Tensor c({1, 3, 9, 9}, 2.5f);
    for (int64_t t : {3, 5, 7, 9, 11}) {
        Tensor y = ops::mean_filter(c, t);
        for (float v : y.data) CHECK(v == Catch::Approx(2.5f).margin(1e-6));
    }
    CHECK_THROWS_AS(ops::mean_filter(c, 4), std::invalid_argument);

    RngStream rng(17, "meanf");
    Tensor x = rand_tensor({1, 1, 6, 5}, rng);
    Tensor y = ops::mean_filter(x, 3);
    for (int64_t yy = 0; yy < 6; ++yy)
        for (int64_t xx = 0; xx < 5; ++xx) {
            double acc = 0;
            for (int64_t dy = -1; dy <= 1; ++dy)
                for (int64_t dx = -1; dx <= 1; ++dx)
                    acc += x.at(0, 0, std::clamp<int64_t>(yy + dy, 0, 5), std::clamp<int64_t>(xx + dx, 0, 4));
            CHECK(double(y.at(0, 0, yy, xx)) == Catch::Approx(acc / 9.0).margin(1e-6));
        }
}

TEST_CASE("bmm with and without transpose") {
    RngStream rng(19, "bmm");
    Tensor a = rand_tensor({3, 4, 5}, rng);
    Tensor b = rand_tensor({3, 5, 6}, rng);
    Tensor y = ops::bmm(a, b, false);
    for (int64_t bi = 0; bi < 3; ++bi)
        for (int64_t m = 0; m < 4; ++m)
            for (int64_t n = 0; n < 6; ++n) {
                double acc = 0;
                for (int64_t k = 0; k < 5; ++k) acc += double(a.at(bi, m, k)) * double(b.at(bi, k, n));
                CHECK(double(y.at(bi, m, n)) == Catch::Approx(acc).margin(1e-5));
            }
    Tensor bt = rand_tensor({3, 6, 5}, rng);
    Tensor yt = ops::bmm(a, bt, true);
    for (int64_t bi = 0; bi < 3; ++bi)
        for (int64_t m = 0; m < 4; ++m)
            for (int64_t n = 0; n < 6; ++n) {
                double acc = 0;
                for (int64_t k = 0; k < 5; ++k) acc += double(a.at(bi, m, k)) * double(bt.at(bi, n, k));
                CHECK(double(yt.at(bi, m, n)) == Catch::Approx(acc).margin(1e-5));
            }
    CHECK_THROWS_AS(ops::bmm(a, Tensor({2, 5, 6}), false), std::invalid_argument);
}

TEST_CASE("window partition and merge are mutually inverse") {
    RngStream rng(23, "windows");
    Tensor x = rand_tensor({2, 6, 8, 16}, rng);
    for (auto [wh, ww] : {std::pair<int64_t, int64_t>{4, 16}, {8, 4}, {2, 2}}) {
        Tensor win = ops::window_partition(x, wh, ww);
        REQUIRE(win.dim(0) == 2 * (8 / wh) * (16 / ww));
        REQUIRE(win.dim(1) == wh * ww);
        REQUIRE(win.dim(2) == 6);
        Tensor back = ops::window_merge(win, wh, ww, 2, 6, 8, 16);
        CHECK(max_abs_diff(back, x) == 0.0);
    }
    // token order inside a window is row-major
    Tensor small({1, 1, 2, 2});
    small.data = {1, 2, 3, 4};
    Tensor win = ops::window_partition(small, 2, 2);
    CHECK(win.data == std::vector<float>{1, 2, 3, 4});
    CHECK_THROWS_AS(ops::window_partition(x, 5, 4), std::invalid_argument);
}

TEST_CASE("roll wraps cyclically and composes to identity") {
    Tensor x({1, 1, 3, 4});
    for (int i = 0; i < 12; ++i) x.data[size_t(i)] = float(i);
    Tensor y = ops::roll(x, 1, 2);
    CHECK(y.at(0, 0, 0, 0) == x.at(0, 0, 2, 2));
    CHECK(y.at(0, 0, 1, 2) == x.at(0, 0, 0, 0));
    Tensor back = ops::roll(y, -1, -2);
    CHECK(max_abs_diff(back, x) == 0.0);
}

TEST_CASE("pad_reflect mirrors without repeating the border") {
    Tensor x({1, 1, 1, 4});
    x.data = {1, 2, 3, 4};
    Tensor y = ops::pad_reflect(x, 0, 0, 2, 2);
    CHECK(y.data == std::vector<float>{3, 2, 1, 2, 3, 4, 3, 2});
    RngStream rng(29, "pad");
    Tensor a = rand_tensor({1, 2, 5, 6}, rng);
    Tensor p = ops::pad_reflect(a, 2, 1, 3, 2);
    Tensor c = ops::crop(p, 2, 3, 5, 6);
    CHECK(max_abs_diff(c, a) == 0.0);
    CHECK_THROWS_AS(ops::pad_reflect(a, 5, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("permute moves axes and inverts") {
    RngStream rng(31, "perm");
    Tensor x = rand_tensor({2, 3, 4, 5}, rng);
    Tensor y = ops::permute(x, {0, 2, 1, 3});
    REQUIRE(y.shape == std::vector<int64_t>{2, 4, 3, 5});
    for (int64_t a = 0; a < 2; ++a)
        for (int64_t b = 0; b < 3; ++b)
            for (int64_t c = 0; c < 4; ++c)
                for (int64_t d = 0; d < 5; ++d)
                    CHECK(y.data[size_t(((a * 4 + c) * 3 + b) * 5 + d)] ==
                          x.data[size_t(((a * 3 + b) * 4 + c) * 5 + d)]);
    Tensor back = ops::permute(y, ops::inverse_perm({0, 2, 1, 3}));
    CHECK(max_abs_diff(back, x) == 0.0);
}

TEST_CASE("channel concat and slice round trip") {
    RngStream rng(37, "concat");
    Tensor a = rand_tensor({2, 3, 4, 4}, rng), b = rand_tensor({2, 5, 4, 4}, rng);
    Tensor cat = ops::concat_channels(a, b);
    REQUIRE(cat.dim(1) == 8);
    CHECK(max_abs_diff(ops::slice_channels(cat, 0, 3), a) == 0.0);
    CHECK(max_abs_diff(ops::slice_channels(cat, 3, 8), b) == 0.0);
}
