#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "kernels.hpp"

namespace craft {

// Identical images give +inf dB; when averaging over a set, each sample is
// capped here so one perfect reconstruction cannot blow up the mean.
inline constexpr double kMeanPsnrCap = 100.0;

namespace metrics_detail {

inline void check_image_pair(const Tensor& a, const Tensor& b, const char* who) {
    check_same_shape(a, b, who);
    if (a.rank() != 2 && a.rank() != 3) throw std::invalid_argument(std::string(who) + ": expected (H,W) or (C,H,W)");
}

inline int64_t img_h(const Tensor& t) { return t.dim(t.rank() - 2); }
inline int64_t img_w(const Tensor& t) { return t.dim(t.rank() - 1); }

}  // namespace metrics_detail

// Mean squared error over all channels after shaving `crop` pixels from each
// image border. Accumulated in double.
inline double mse(const Tensor& a, const Tensor& b, int64_t crop = 0) {
    metrics_detail::check_image_pair(a, b, "mse");
    int64_t h = metrics_detail::img_h(a), w = metrics_detail::img_w(a);
    if (crop < 0 || 2 * crop >= h || 2 * crop >= w) throw std::invalid_argument("mse: crop leaves no pixels");
    int64_t c = a.rank() == 3 ? a.dim(0) : 1;
    double acc = 0;
    int64_t count = 0;
    for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = crop; y < h - crop; ++y)
            for (int64_t x = crop; x < w - crop; ++x) {
                size_t i = size_t((ch * h + y) * w + x);
                double d = double(a.data[i]) - double(b.data[i]);
                acc += d * d;
                ++count;
            }
    return acc / double(count);
}

inline double psnr(const Tensor& a, const Tensor& b, double peak = 1.0, int64_t crop = 0) {
    double e = mse(a, b, crop);
    if (e == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / e);
}

inline double mean_psnr(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean_psnr: empty set");
    double acc = 0;
    for (double v : values) acc += std::min(v, kMeanPsnrCap);
    return acc / double(values.size());
}

namespace metrics_detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(size_t(size), 0.0);
    int half = size / 2;
    double sum = 0;
    for (int i = 0; i < size; ++i) {
        double d = double(i - half);
        w[size_t(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[size_t(i)];
    }
    for (auto& v : w) v /= sum;
    return w;
}

// separable valid-mode filtering of one (H,W) channel
inline std::vector<double> filter_valid(const std::vector<double>& img, int64_t h, int64_t w,
                                        const std::vector<double>& win) {
    int64_t k = int64_t(win.size());
    int64_t oh = h - k + 1, ow = w - k + 1;
    std::vector<double> rows(size_t(h * ow), 0.0), out(size_t(oh * ow), 0.0);
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < ow; ++x) {
            double acc = 0;
            for (int64_t i = 0; i < k; ++i) acc += win[size_t(i)] * img[size_t(y * w + x + i)];
            rows[size_t(y * ow + x)] = acc;
        }
    for (int64_t y = 0; y < oh; ++y)
        for (int64_t x = 0; x < ow; ++x) {
            double acc = 0;
            for (int64_t i = 0; i < k; ++i) acc += win[size_t(i)] * rows[size_t((y + i) * ow + x)];
            out[size_t(y * ow + x)] = acc;
        }
    return out;
}

inline double ssim_channel(const float* a, const float* b, int64_t h, int64_t w, double peak) {
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5, kK1 = 0.01, kK2 = 0.03;
    if (h < kWin || w < kWin) throw std::invalid_argument("ssim: image smaller than 11x11 window");
    double c1 = (kK1 * peak) * (kK1 * peak);
    double c2 = (kK2 * peak) * (kK2 * peak);
    auto win = gaussian_window(kWin, kSigma);
    size_t n = size_t(h * w);
    std::vector<double> da(n), db(n), daa(n), dbb(n), dab(n);
    for (size_t i = 0; i < n; ++i) {
        da[i] = a[i];
        db[i] = b[i];
        daa[i] = da[i] * da[i];
        dbb[i] = db[i] * db[i];
        dab[i] = da[i] * db[i];
    }
    auto mu_a = filter_valid(da, h, w, win);
    auto mu_b = filter_valid(db, h, w, win);
    auto m_aa = filter_valid(daa, h, w, win);
    auto m_bb = filter_valid(dbb, h, w, win);
    auto m_ab = filter_valid(dab, h, w, win);
    double acc = 0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        double ma = mu_a[i], mb = mu_b[i];
        double va = m_aa[i] - ma * ma;
        double vb = m_bb[i] - mb * mb;
        double cov = m_ab[i] - ma * mb;
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return acc / double(mu_a.size());
}

}  // namespace metrics_detail

// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), valid positions only.
// Multi-channel inputs average the per-channel scores.
inline double ssim(const Tensor& a, const Tensor& b, double peak = 1.0, int64_t crop = 0) {
    metrics_detail::check_image_pair(a, b, "ssim");
    int64_t h = metrics_detail::img_h(a), w = metrics_detail::img_w(a);
    if (crop < 0 || 2 * crop >= h || 2 * crop >= w) throw std::invalid_argument("ssim: crop leaves no pixels");
    int64_t c = a.rank() == 3 ? a.dim(0) : 1;
    int64_t ch2 = h - 2 * crop, cw2 = w - 2 * crop;
    std::vector<float> ca(size_t(ch2 * cw2)), cb(size_t(ch2 * cw2));
    double acc = 0;
    for (int64_t chn = 0; chn < c; ++chn) {
        for (int64_t y = 0; y < ch2; ++y)
            for (int64_t x = 0; x < cw2; ++x) {
                size_t src = size_t((chn * h + y + crop) * w + x + crop);
                ca[size_t(y * cw2 + x)] = a.data[src];
                cb[size_t(y * cw2 + x)] = b.data[src];
            }
        acc += metrics_detail::ssim_channel(ca.data(), cb.data(), ch2, cw2, peak);
    }
    return acc / double(c);
}

// Studio-swing luminance: rgb in [0,1] maps to y in [16/255, 235/255], the
// convention benchmark SR results are reported in.
inline Tensor luma_studio(const Tensor& rgb) {
    check_rank(rgb, 3, "luma_studio");
    if (rgb.dim(0) != 3) throw std::invalid_argument("luma_studio: expected 3 channels");
    int64_t h = rgb.dim(1), w = rgb.dim(2);
    Tensor y({h, w});
    const float* r = rgb.data.data();
    const float* g = r + h * w;
    const float* b = g + h * w;
    for (int64_t i = 0; i < h * w; ++i)
        y.data[size_t(i)] =
            float((16.0 + 65.481 * double(r[i]) + 128.553 * double(g[i]) + 24.966 * double(b[i])) / 255.0);
    return y;
}

// Full-swing luminance, used for spectrum analysis where the affine offset of
// the studio convention would plant a spurious DC term.
inline Tensor luma_full(const Tensor& rgb) {
    check_rank(rgb, 3, "luma_full");
    if (rgb.dim(0) != 3) throw std::invalid_argument("luma_full: expected 3 channels");
    int64_t h = rgb.dim(1), w = rgb.dim(2);
    Tensor y({h, w});
    const float* r = rgb.data.data();
    const float* g = r + h * w;
    const float* b = g + h * w;
    for (int64_t i = 0; i < h * w; ++i)
        y.data[size_t(i)] = float(0.299 * double(r[i]) + 0.587 * double(g[i]) + 0.114 * double(b[i]));
    return y;
}

// Benchmark-style scores: studio luma, border shave of `scale` pixels.
inline double psnr_y(const Tensor& sr, const Tensor& hr, int64_t scale) {
    return psnr(luma_studio(sr), luma_studio(hr), 1.0, scale);
}

inline double ssim_y(const Tensor& sr, const Tensor& hr, int64_t scale) {
    return ssim(luma_studio(sr), luma_studio(hr), 1.0, scale);
}

}  // namespace craft
