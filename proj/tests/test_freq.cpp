#include <catch2/catch_amalgamated.hpp>
#include <complex>

#include "craft/freq.hpp"
#include "support/test_util.hpp"

using craft::Tensor;

namespace {

// test-side band limiter: naive DFT, explicit shifted ranking, naive inverse
Tensor oracle_drop(const Tensor& plane, double gamma) {
    int64_t h = plane.dim(0), w = plane.dim(1);
    auto f = testutil::naive_dft2(plane);
    int64_t cy = h / 2, cx = w / 2;
    struct Bin {
        int64_t d2, pos;
    };
    std::vector<Bin> bins;
    for (int64_t sy = 0; sy < h; ++sy)
        for (int64_t sx = 0; sx < w; ++sx)
            bins.push_back({(sy - cy) * (sy - cy) + (sx - cx) * (sx - cx), sy * w + sx});
    std::sort(bins.begin(), bins.end(), [](const Bin& a, const Bin& b) {
        if (a.d2 != b.d2) return a.d2 > b.d2;
        return a.pos < b.pos;
    });
    int64_t n_drop = int64_t(gamma * double(h * w));
    for (int64_t i = 0; i < n_drop; ++i) {
        int64_t sy = bins[size_t(i)].pos / w, sx = bins[size_t(i)].pos % w;
        int64_t y = (sy - cy + h) % h, x = (sx - cx + w) % w;  // undo the centre shift
        f[size_t(y * w + x)] = {0, 0};
    }
    Tensor out({h, w});
    constexpr double pi = 3.14159265358979323846264338327950288;
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            std::complex<double> acc(0, 0);
            for (int64_t v = 0; v < h; ++v)
                for (int64_t u = 0; u < w; ++u) {
                    double ang = 2.0 * pi * (double(v * y) / double(h) + double(u * x) / double(w));
                    acc += f[size_t(v * w + u)] * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out.at(y, x) = float(acc.real() / double(h * w));
        }
    return out;
}

craft::CraftConfig toy_config() {
    craft::CraftConfig cfg;
    cfg.channels = 16;
    cfg.heads = 4;
    cfg.n_groups = 1;
    cfg.n_crfb = 2;
    cfg.scale = 4;
    cfg.seed = 3;
    return cfg;
}

}  // namespace

TEST_CASE("band limiting matches the naive spectral oracle") {
    testutil::RngStream rng(61, "freq.oracle");
    Tensor img = testutil::rand_tensor({8, 8}, rng, 0.0, 1.0);
    for (double gamma : {1.0 / 64, 5.0 / 64, 17.0 / 64, 0.5, 63.0 / 64}) {
        Tensor got = craft::drop_high_freq(img, gamma);
        Tensor want = oracle_drop(img, gamma);
        REQUIRE(craft::max_abs_diff(got, want) < 1e-4);
    }
}

TEST_CASE("gamma zero is the identity and gamma one the zero image") {
    testutil::RngStream rng(62, "freq.ends");
    Tensor img = testutil::rand_tensor({3, 12, 10}, rng, 0.0, 1.0);
    Tensor same = craft::drop_high_freq(img, 0.0);
    REQUIRE(same.data == img.data);
    Tensor zero = craft::drop_high_freq(img, 1.0);
    for (float v : zero.data) REQUIRE(v == 0.0f);
}

TEST_CASE("band limiting is a projection at ring-aligned cutoffs") {
    // A cutoff inside a tie ring of equal distances can zero one half of a
    // conjugate bin pair only, and discarding the imaginary remainder then
    // breaks idempotence. Cut between rings and the operation is a projection.
    testutil::RngStream rng(63, "freq.proj");
    Tensor img = testutil::rand_tensor({16, 16}, rng, 0.0, 1.0);
    auto order = craft::freq_detail::drop_order(16, 16);
    auto d2 = [&](size_t i) {
        int64_t y = order[i] / 16 - 8, x = order[i] % 16 - 8;
        return y * y + x * x;
    };
    size_t n = 102;  // pull back to the nearest ring boundary
    while (n > 0 && d2(n - 1) == d2(n)) --n;
    double gamma = double(n) / 256.0;
    Tensor once = craft::drop_high_freq(img, gamma);
    Tensor twice = craft::drop_high_freq(once, gamma);
    REQUIRE(craft::max_abs_diff(once, twice) < 1e-4);
}

TEST_CASE("the centre bin survives every partial drop") {
    Tensor flat({10, 10}, 0.42f);
    Tensor out = craft::drop_high_freq(flat, 0.99);
    for (float v : out.data) REQUIRE(v == Catch::Approx(0.42f).margin(1e-5));
}

TEST_CASE("drop order runs outside-in with row-major tie breaks") {
    auto order = craft::freq_detail::drop_order(8, 8);
    REQUIRE(order.front() == 0);        // unique farthest corner of the shifted grid
    REQUIRE(order.back() == 4 * 8 + 4);  // centre, distance zero
    // distances along the order never increase
    auto d2 = [](int64_t pos) {
        int64_t y = pos / 8 - 4, x = pos % 8 - 4;
        return y * y + x * x;
    };
    for (size_t i = 1; i < order.size(); ++i) REQUIRE(d2(order[i - 1]) >= d2(order[i]));
}

TEST_CASE("removed energy grows with gamma") {
    testutil::RngStream rng(64, "freq.mono");
    Tensor img = testutil::rand_tensor({16, 16}, rng, 0.0, 1.0);
    double prev = -1.0;
    for (double gamma : {0.0, 0.1, 0.3, 0.6, 0.9}) {
        Tensor out = craft::drop_high_freq(img, gamma);
        double removed = 0;
        for (size_t i = 0; i < img.data.size(); ++i) {
            double d = double(img.data[i]) - double(out.data[i]);
            removed += d * d;
        }
        REQUIRE(removed >= prev - 1e-9);
        prev = removed;
    }
}

TEST_CASE("radial spectrum of an impulse is flat at log 2") {
    Tensor img({16, 16}, 0.f);
    img.data[0] = 1.f;
    auto bins = craft::log_amplitude_spectrum(img);
    REQUIRE(bins.size() == 9);
    for (double b : bins) REQUIRE(b == Catch::Approx(std::log(2.0)).margin(1e-6));
}

TEST_CASE("radial spectrum localises a pure grating") {
    Tensor img({16, 16});
    for (int64_t y = 0; y < 16; ++y)
        for (int64_t x = 0; x < 16; ++x)
            img.at(y, x) = 0.5f + 0.4f * float(std::sin(2.0 * 3.14159265358979 * 4.0 * double(x) / 16.0));
    auto bins = craft::log_amplitude_spectrum(img);
    size_t peak = 1;
    for (size_t i = 1; i < bins.size(); ++i)
        if (bins[i] > bins[peak]) peak = i;
    REQUIRE(peak == 4);
}

TEST_CASE("residual spectrum is zero for identical inputs and symmetric") {
    testutil::RngStream rng(65, "freq.resid");
    Tensor a = testutil::rand_tensor({3, 12, 12}, rng, 0.0, 1.0);
    Tensor b = testutil::rand_tensor({3, 12, 12}, rng, 0.0, 1.0);
    Tensor same = craft::residual_spectrum(a, a);
    for (float v : same.data) REQUIRE(v == Catch::Approx(0.0).margin(1e-4));
    Tensor ab = craft::residual_spectrum(a, b);
    Tensor ba = craft::residual_spectrum(b, a);
    REQUIRE(craft::max_abs_diff(ab, ba) < 1e-6);
    for (float v : ab.data) REQUIRE(v >= 0.f);
}

TEST_CASE("drop curves anchor at zero ratio for pristine input") {
    craft::CraftModel model(toy_config());
    std::vector<Tensor> hrs = {craft::synth_image(21, 0, 48, 48), craft::synth_image(21, 1, 48, 48)};
    std::vector<double> gammas = {0.0, 0.3};
    for (auto mode : {craft::DropMode::degraded_reference, craft::DropMode::pristine_reference}) {
        auto curve = craft::drop_ratio_curve(model, hrs, gammas, mode);
        REQUIRE(curve.size() == 2);
        REQUIRE(curve[0].gamma == 0.0);
        REQUIRE(curve[0].ratio == 0.0);
        for (const auto& pt : curve) {
            REQUIRE(std::isfinite(pt.mean_psnr));
            REQUIRE(std::isfinite(pt.ratio));
        }
    }
}

TEST_CASE("mean filter curve reports one score per window") {
    craft::CraftModel model(toy_config());
    std::vector<Tensor> hrs = {craft::synth_image(22, 0, 32, 32)};
    auto curve = craft::mean_filter_curve(model, hrs, {3, 5});
    REQUIRE(curve.size() == 2);
    REQUIRE(curve[0].theta == 3);
    REQUIRE(curve[1].theta == 5);
    for (const auto& pt : curve) REQUIRE(std::isfinite(pt.mean_psnr));
}

TEST_CASE("radial profile averages integer distance rings") {
    // 5x5 centre at (2,2): ring 0 has 1 cell, ring 1 the 8 neighbours
    // (diagonals round 1.414 -> 1), ring 2 twelve cells; corners round to 3
    // and fall outside rmax = 2
    std::vector<double> flat(25, 1.0);
    auto bins = craft::radial_mean(flat, 5, 5);
    REQUIRE(bins.size() == 3);
    for (double b : bins) REQUIRE(b == 1.0);

    std::vector<double> delta(25, 0.0);
    delta[2 * 5 + 2] = 7.0;
    bins = craft::radial_mean(delta, 5, 5);
    CHECK(bins[0] == 7.0);
    CHECK(bins[1] == 0.0);
    CHECK(bins[2] == 0.0);

    std::vector<double> ring1(25, 0.0);
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 3; ++x)
            if (y != 2 || x != 2) ring1[size_t(y * 5 + x)] = 2.0;
    bins = craft::radial_mean(ring1, 5, 5);
    CHECK(bins[0] == 0.0);
    CHECK(bins[1] == 2.0);
    CHECK(bins[2] == 0.0);

    // corner cells never reach any bin
    std::vector<double> corners(25, 0.0);
    corners[0] = corners[4] = corners[20] = corners[24] = 100.0;
    bins = craft::radial_mean(corners, 5, 5);
    for (double b : bins) CHECK(b == 0.0);

    REQUIRE_THROWS_AS(craft::radial_mean(flat, 4, 5), std::invalid_argument);
}
