#pragma once

#include <complex>
#include <vector>

#include "tensor.hpp"

namespace craft {

// Complex H x W grid stored as separate float planes.
struct ComplexGrid {
    int64_t h = 0, w = 0;
    std::vector<float> re, im;

    ComplexGrid() = default;
    ComplexGrid(int64_t hh, int64_t ww) : h(hh), w(ww) {
        re.assign(size_t(h * w), 0.f);
        im.assign(size_t(h * w), 0.f);
    }
    size_t idx(int64_t y, int64_t x) const { return size_t(y * w + x); }
    double magnitude(int64_t y, int64_t x) const {
        return std::hypot(double(re[idx(y, x)]), double(im[idx(y, x)]));
    }
};

namespace fft_detail {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846264338327950288;

inline bool is_pow2(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative in-place radix-2, size must be a power of two. sign=-1 forward.
inline void fft_pow2(std::vector<cplx>& a, int sign) {
    int64_t n = int64_t(a.size());
    for (int64_t i = 1, j = 0; i < n; ++i) {
        int64_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[size_t(i)], a[size_t(j)]);
    }
    for (int64_t len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * kPi / double(len);
        cplx wl(std::cos(ang), std::sin(ang));
        for (int64_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (int64_t k = 0; k < len / 2; ++k) {
                cplx u = a[size_t(i + k)];
                cplx v = a[size_t(i + k + len / 2)] * w;
                a[size_t(i + k)] = u + v;
                a[size_t(i + k + len / 2)] = u - v;
                w *= wl;
            }
        }
    }
}

// Arbitrary-length DFT via the Bluestein chirp transform. sign=-1 forward, unnormalized.
inline void dft_any(std::vector<cplx>& a, int sign) {
    int64_t n = int64_t(a.size());
    if (n == 1) return;
    if (is_pow2(n)) {
        fft_pow2(a, sign);
        return;
    }
    int64_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    // chirp c_k = exp(sign * i * pi * k^2 / n); k^2 taken mod 2n to keep angles accurate
    std::vector<cplx> chirp(size_t(n), cplx(0, 0));
    for (int64_t k = 0; k < n; ++k) {
        int64_t k2 = (k * k) % (2 * n);
        double ang = sign * kPi * double(k2) / double(n);
        chirp[size_t(k)] = cplx(std::cos(ang), std::sin(ang));
    }
    std::vector<cplx> A(size_t(m), cplx(0, 0)), B(size_t(m), cplx(0, 0));
    for (int64_t k = 0; k < n; ++k) A[size_t(k)] = a[size_t(k)] * chirp[size_t(k)];
    for (int64_t k = 0; k < n; ++k) {
        cplx h = std::conj(chirp[size_t(k)]);
        B[size_t(k)] = h;
        if (k > 0) B[size_t(m - k)] = h;
    }
    fft_pow2(A, -1);
    fft_pow2(B, -1);
    for (int64_t k = 0; k < m; ++k) A[size_t(k)] *= B[size_t(k)];
    fft_pow2(A, +1);
    double inv_m = 1.0 / double(m);
    for (int64_t k = 0; k < n; ++k) a[size_t(k)] = A[size_t(k)] * inv_m * chirp[size_t(k)];
}

inline void transform_2d(ComplexGrid& g, int sign) {
    std::vector<cplx> buf;
    buf.resize(size_t(std::max(g.h, g.w)));
    for (int64_t y = 0; y < g.h; ++y) {
        buf.resize(size_t(g.w));
        for (int64_t x = 0; x < g.w; ++x) buf[size_t(x)] = cplx(g.re[g.idx(y, x)], g.im[g.idx(y, x)]);
        dft_any(buf, sign);
        for (int64_t x = 0; x < g.w; ++x) {
            g.re[g.idx(y, x)] = float(buf[size_t(x)].real());
            g.im[g.idx(y, x)] = float(buf[size_t(x)].imag());
        }
    }
    for (int64_t x = 0; x < g.w; ++x) {
        buf.resize(size_t(g.h));
        for (int64_t y = 0; y < g.h; ++y) buf[size_t(y)] = cplx(g.re[g.idx(y, x)], g.im[g.idx(y, x)]);
        dft_any(buf, sign);
        for (int64_t y = 0; y < g.h; ++y) {
            g.re[g.idx(y, x)] = float(buf[size_t(y)].real());
            g.im[g.idx(y, x)] = float(buf[size_t(y)].imag());
        }
    }
}

}  // namespace fft_detail

// Forward 2-D DFT, unnormalized: X[v,u] = sum x[y,x] exp(-2 pi i (vy/H + ux/W)).
inline ComplexGrid fft2(const Tensor& x) {
    check_rank(x, 2, "fft2 input");
    ComplexGrid g(x.dim(0), x.dim(1));
    for (size_t i = 0; i < x.data.size(); ++i) g.re[i] = x.data[i];
    fft_detail::transform_2d(g, -1);
    return g;
}

inline ComplexGrid fft2(const ComplexGrid& x) {
    ComplexGrid g = x;
    fft_detail::transform_2d(g, -1);
    return g;
}

// Inverse 2-D DFT with the 1/(HW) factor.
inline ComplexGrid ifft2(const ComplexGrid& f) {
    ComplexGrid g = f;
    fft_detail::transform_2d(g, +1);
    double inv = 1.0 / double(g.h * g.w);
    for (size_t i = 0; i < g.re.size(); ++i) {
        g.re[i] = float(double(g.re[i]) * inv);
        g.im[i] = float(double(g.im[i]) * inv);
    }
    return g;
}

// Moves DC to (floor(H/2), floor(W/2)).
inline ComplexGrid fftshift(const ComplexGrid& g) {
    ComplexGrid out(g.h, g.w);
    int64_t cy = g.h / 2, cx = g.w / 2;
    for (int64_t y = 0; y < g.h; ++y)
        for (int64_t x = 0; x < g.w; ++x) {
            int64_t sy = (y + cy) % g.h, sx = (x + cx) % g.w;
            out.re[out.idx(sy, sx)] = g.re[g.idx(y, x)];
            out.im[out.idx(sy, sx)] = g.im[g.idx(y, x)];
        }
    return out;
}

inline ComplexGrid ifftshift(const ComplexGrid& g) {
    ComplexGrid out(g.h, g.w);
    int64_t cy = g.h / 2, cx = g.w / 2;
    for (int64_t y = 0; y < g.h; ++y)
        for (int64_t x = 0; x < g.w; ++x) {
            int64_t sy = (y + cy) % g.h, sx = (x + cx) % g.w;
            out.re[out.idx(y, x)] = g.re[g.idx(sy, sx)];
            out.im[out.idx(y, x)] = g.im[g.idx(sy, sx)];
        }
    return out;
}

inline Tensor real_part(const ComplexGrid& g) {
    Tensor t({g.h, g.w});
    for (size_t i = 0; i < g.re.size(); ++i) t.data[i] = g.re[i];
    return t;
}

}  // namespace craft
