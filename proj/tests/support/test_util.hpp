#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "craft/rng.hpp"
#include "craft/tensor.hpp"

namespace testutil {

using craft::RngStream;
using craft::Tensor;

inline Tensor rand_tensor(std::vector<int64_t> shape, RngStream& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = float(rng.uniform(lo, hi));
    return t;
}

// Reference convolution: direct six-loop accumulation in double.
inline Tensor naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int64_t stride, int64_t pad,
                           int64_t groups) {
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    int64_t O = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    int64_t Cg = C / groups, Og = O / groups;
    int64_t Ho = (H + 2 * pad - kh) / stride + 1;
    int64_t Wo = (W + 2 * pad - kw) / stride + 1;
    Tensor out({N, O, Ho, Wo});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < O; ++o) {
            int64_t g = o / Og;
            for (int64_t oy = 0; oy < Ho; ++oy)
                for (int64_t ox = 0; ox < Wo; ++ox) {
                    double acc = b.numel() > 0 ? double(b.data[size_t(o)]) : 0.0;
                    for (int64_t c = 0; c < Cg; ++c)
                        for (int64_t ky = 0; ky < kh; ++ky)
                            for (int64_t kx = 0; kx < kw; ++kx) {
                                int64_t iy = oy * stride - pad + ky;
                                int64_t ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                acc += double(x.at(n, g * Cg + c, iy, ix)) *
                                       double(w.at(o, c, ky, kx));
                            }
                    out.at(n, o, oy, ox) = float(acc);
                }
        }
    return out;
}

// Reference O(N^2) 2-D DFT, unnormalized forward.
inline std::vector<std::complex<double>> naive_dft2(const Tensor& x) {
    int64_t H = x.dim(0), W = x.dim(1);
    std::vector<std::complex<double>> out(size_t(H * W));
    constexpr double pi = 3.14159265358979323846264338327950288;
    for (int64_t v = 0; v < H; ++v)
        for (int64_t u = 0; u < W; ++u) {
            std::complex<double> acc(0, 0);
            for (int64_t y = 0; y < H; ++y)
                for (int64_t xx = 0; xx < W; ++xx) {
                    double ang = -2.0 * pi * (double(v * y) / double(H) + double(u * xx) / double(W));
                    acc += double(x.at(y, xx)) * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out[size_t(v * W + u)] = acc;
        }
    return out;
}

// Central finite difference of a scalar functional at one input element.
inline double central_diff(const std::function<double(const Tensor&)>& f, Tensor x, size_t flat, double h = 1e-3) {
    float orig = x.data[flat];
    x.data[flat] = float(double(orig) + h);
    double up = f(x);
    x.data[flat] = float(double(orig) - h);
    double dn = f(x);
    x.data[flat] = orig;
    return (up - dn) / (2.0 * h);
}

inline double rel_err(double got, double want) {
    double denom = std::max(std::abs(want), 1e-8);
    return std::abs(got - want) / denom;
}

}  // namespace testutil
