#pragma once

#include <algorithm>
#include <vector>

#include "fft.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "model.hpp"

namespace craft {

namespace freq_detail {

// spectral bins ordered from the most distant to the centre after shifting,
// ties broken by row-major position so the ordering is total
inline std::vector<int64_t> drop_order(int64_t h, int64_t w) {
    int64_t cy = h / 2, cx = w / 2;
    std::vector<int64_t> order(size_t(h * w), 0);
    for (int64_t i = 0; i < h * w; ++i) order[size_t(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        int64_t ay = a / w - cy, ax = a % w - cx;
        int64_t by = b / w - cy, bx = b % w - cx;
        int64_t da = ay * ay + ax * ax, db = by * by + bx * bx;
        if (da != db) return da > db;
        return a < b;
    });
    return order;
}

inline Tensor drop_plane(const Tensor& plane, double gamma) {
    int64_t h = plane.dim(0), w = plane.dim(1);
    ComplexGrid f = fftshift(fft2(plane));
    auto order = drop_order(h, w);
    int64_t n_drop = int64_t(gamma * double(h * w));
    for (int64_t i = 0; i < n_drop; ++i) {
        f.re[size_t(order[size_t(i)])] = 0;
        f.im[size_t(order[size_t(i)])] = 0;
    }
    return real_part(ifft2(ifftshift(f)));
}

}  // namespace freq_detail

// Removes the gamma*H*W spectral bins farthest from the centre frequency of
// each channel. gamma 0 returns the input untouched, gamma 1 a zero image.
inline Tensor drop_high_freq(const Tensor& img, double gamma) {
    if (img.rank() != 2 && img.rank() != 3) throw std::invalid_argument("drop_high_freq: expected (H,W) or (C,H,W)");
    if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("drop_high_freq: gamma must lie in [0,1]");
    if (gamma == 0.0) return img;
    if (img.rank() == 2) return freq_detail::drop_plane(img, gamma);
    int64_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
    Tensor out(img.shape);
    for (int64_t ch = 0; ch < c; ++ch) {
        Tensor plane({h, w});
        std::copy_n(img.data.begin() + ch * h * w, h * w, plane.data.begin());
        Tensor dropped = freq_detail::drop_plane(plane, gamma);
        std::copy_n(dropped.data.begin(), h * w, out.data.begin() + ch * h * w);
    }
    return out;
}

// ------------------------------------------------------- model degradations

namespace freq_detail {

inline Tensor sr_image(CraftModel& model, const Tensor& lr, QuantContext* qc) {
    Tensor batched = lr.reshaped({1, lr.dim(0), lr.dim(1), lr.dim(2)});
    Tensor out = model.infer(batched, qc);
    return out.reshaped({out.dim(1), out.dim(2), out.dim(3)});
}

}  // namespace freq_detail

enum class DropMode {
    degraded_reference,  // score against the band-limited ground truth
    pristine_reference,  // score against the untouched ground truth
};

struct DropPoint {
    double gamma = 0;
    double mean_psnr = 0;
    double ratio = 0;  // psnr change relative to the gamma=0 baseline
};

// Band-limits the ground truth, regenerates the low-res input from it, runs
// the model and scores on studio luma with a scale-pixel border shave.
inline std::vector<DropPoint> drop_ratio_curve(CraftModel& model, const std::vector<Tensor>& hr_images,
                                               const std::vector<double>& gammas, DropMode mode,
                                               QuantContext* qc = nullptr) {
    if (hr_images.empty()) throw std::invalid_argument("drop_ratio_curve: empty image set");
    int64_t r = model.config().scale;
    std::vector<Tensor> hr;
    std::vector<double> base;
    for (const auto& img : hr_images) {
        DegradedPair pair = degrade(img, r);
        Tensor sr = freq_detail::sr_image(model, pair.lr, qc);
        base.push_back(psnr_y(sr, pair.hr, r));
        hr.push_back(std::move(pair.hr));
    }
    double p0 = mean_psnr(base);

    std::vector<DropPoint> curve;
    for (double gamma : gammas) {
        std::vector<double> scores;
        for (const auto& img : hr) {
            Tensor dropped = drop_high_freq(img, gamma);
            DegradedPair pair = degrade(dropped, r);
            Tensor sr = freq_detail::sr_image(model, pair.lr, qc);
            const Tensor& ref = mode == DropMode::degraded_reference ? dropped : img;
            scores.push_back(psnr_y(sr, ref, r));
        }
        DropPoint pt;
        pt.gamma = gamma;
        pt.mean_psnr = mean_psnr(scores);
        pt.ratio = mode == DropMode::degraded_reference ? (p0 - pt.mean_psnr) / p0 : (pt.mean_psnr - p0) / p0;
        curve.push_back(pt);
    }
    return curve;
}

struct MeanFilterPoint {
    int64_t theta = 0;
    double mean_psnr = 0;
};

// Same pipeline with a spatial mean filter standing in for the band limiter;
// scored against the filtered ground truth.
inline std::vector<MeanFilterPoint> mean_filter_curve(CraftModel& model, const std::vector<Tensor>& hr_images,
                                                      const std::vector<int64_t>& thetas,
                                                      QuantContext* qc = nullptr) {
    if (hr_images.empty()) throw std::invalid_argument("mean_filter_curve: empty image set");
    int64_t r = model.config().scale;
    std::vector<MeanFilterPoint> curve;
    for (int64_t theta : thetas) {
        std::vector<double> scores;
        for (const auto& img : hr_images) {
            Tensor filtered = ops::mean_filter(img.reshaped({1, img.dim(0), img.dim(1), img.dim(2)}), theta)
                                  .reshaped(img.shape);
            DegradedPair pair = degrade(filtered, r);
            Tensor sr = freq_detail::sr_image(model, pair.lr, qc);
            scores.push_back(psnr_y(sr, pair.hr, r));
        }
        curve.push_back({theta, mean_psnr(scores)});
    }
    return curve;
}

// ------------------------------------------------------------ spectra

// Mean per integer-radius ring around the centre bin (h/2, w/2); rings past
// min(h, w)/2 are dropped.
inline std::vector<double> radial_mean(const std::vector<double>& map, int64_t h, int64_t w) {
    if (int64_t(map.size()) != h * w) throw std::invalid_argument("radial_mean: map size mismatch");
    int64_t cy = h / 2, cx = w / 2;
    int64_t rmax = std::min(h, w) / 2;
    std::vector<double> acc(size_t(rmax + 1), 0.0);
    std::vector<int64_t> count(size_t(rmax + 1), 0);
    for (int64_t yy = 0; yy < h; ++yy)
        for (int64_t xx = 0; xx < w; ++xx) {
            double d = std::sqrt(double((yy - cy) * (yy - cy) + (xx - cx) * (xx - cx)));
            int64_t bin = int64_t(std::llround(d));
            if (bin > rmax) continue;
            acc[size_t(bin)] += map[size_t(yy * w + xx)];
            ++count[size_t(bin)];
        }
    for (size_t i = 0; i < acc.size(); ++i) acc[i] = count[i] ? acc[i] / double(count[i]) : 0.0;
    return acc;
}

// Radially averaged log amplitude of the centred spectrum on full-range luma.
// Bin k collects pixels whose rounded distance from the centre is k.
inline std::vector<double> log_amplitude_spectrum(const Tensor& img) {
    Tensor y = img.rank() == 3 ? luma_full(img) : img;
    check_rank(y, 2, "log_amplitude_spectrum");
    int64_t h = y.dim(0), w = y.dim(1);
    ComplexGrid f = fftshift(fft2(y));
    std::vector<double> logmag(size_t(h * w));
    for (int64_t yy = 0; yy < h; ++yy)
        for (int64_t xx = 0; xx < w; ++xx)
            logmag[size_t(yy * w + xx)] = std::log1p(f.magnitude(yy, xx));
    return radial_mean(logmag, h, w);
}

// Centred per-bin magnitude difference between two images, for inspecting
// which bands a reconstruction lost or invented.
inline Tensor residual_spectrum(const Tensor& a, const Tensor& b) {
    Tensor ya = a.rank() == 3 ? luma_full(a) : a;
    Tensor yb = b.rank() == 3 ? luma_full(b) : b;
    check_same_shape(ya, yb, "residual_spectrum");
    check_rank(ya, 2, "residual_spectrum");
    int64_t h = ya.dim(0), w = ya.dim(1);
    ComplexGrid fa = fftshift(fft2(ya));
    ComplexGrid fb = fftshift(fft2(yb));
    Tensor out({h, w});
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            out.data[size_t(y * w + x)] = float(std::abs(fa.magnitude(y, x) - fb.magnitude(y, x)));
    return out;
}

}  // namespace craft
