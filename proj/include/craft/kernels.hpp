#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "parallel.hpp"
#include "tensor.hpp"

namespace craft::ops {

// ---------------------------------------------------------------- gemm

// C[m][n] (+)= sum_k A[m][k] * B[k][n]; row-major, fixed loop order.
inline void gemm_acc(const float* A, const float* B, float* C, int64_t M, int64_t K, int64_t N) {
    parallel_for(M, [&](int64_t m0, int64_t m1) {
        for (int64_t m = m0; m < m1; ++m) {
            const float* a = A + m * K;
            float* c = C + m * N;
            for (int64_t k = 0; k < K; ++k) {
                float av = a[k];
                const float* b = B + k * N;
                for (int64_t n = 0; n < N; ++n) c[n] += av * b[n];
            }
        }
    });
}

// ---------------------------------------------------------------- conv2d

struct ConvSpec {
    int64_t stride = 1;
    int64_t pad = 0;
    int64_t groups = 1;
};

inline void conv_check(const Tensor& x, const Tensor& w, const Tensor& b, const ConvSpec& cs) {
    check_rank(x, 4, "conv2d input");
    check_rank(w, 4, "conv2d weight");
    int64_t C = x.dim(1), O = w.dim(0);
    if (cs.groups < 1 || C % cs.groups != 0 || O % cs.groups != 0)
        throw std::invalid_argument("conv2d: groups " + std::to_string(cs.groups) + " must divide channels of " +
                                    x.shape_str() + " and " + w.shape_str());
    if (w.dim(1) != C / cs.groups)
        throw std::invalid_argument("conv2d: weight " + w.shape_str() + " does not match input " + x.shape_str() +
                                    " with groups " + std::to_string(cs.groups));
    if (b.numel() > 0 && (b.rank() != 1 || b.dim(0) != O))
        throw std::invalid_argument("conv2d: bias " + b.shape_str() + " does not match weight " + w.shape_str());
    if (cs.stride < 1 || cs.pad < 0) throw std::invalid_argument("conv2d: bad stride/pad");
    int64_t kh = w.dim(2), kw = w.dim(3);
    if (x.dim(2) + 2 * cs.pad < kh || x.dim(3) + 2 * cs.pad < kw)
        throw std::invalid_argument("conv2d: kernel " + w.shape_str() + " larger than padded input " + x.shape_str());
}

// col layout: (Cg*kh*kw) x (Ho*Wo) for one (sample, group).
inline void im2col(const float* x, int64_t C, int64_t H, int64_t W, int64_t c0, int64_t Cg, int64_t kh, int64_t kw,
                   int64_t stride, int64_t pad, int64_t Ho, int64_t Wo, float* col) {
    for (int64_t c = 0; c < Cg; ++c) {
        const float* xc = x + (c0 + c) * H * W;
        for (int64_t ky = 0; ky < kh; ++ky) {
            for (int64_t kx = 0; kx < kw; ++kx) {
                float* dst = col + ((c * kh + ky) * kw + kx) * Ho * Wo;
                for (int64_t oy = 0; oy < Ho; ++oy) {
                    int64_t iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) {
                        std::memset(dst + oy * Wo, 0, size_t(Wo) * sizeof(float));
                        continue;
                    }
                    const float* src = xc + iy * W;
                    for (int64_t ox = 0; ox < Wo; ++ox) {
                        int64_t ix = ox * stride - pad + kx;
                        dst[oy * Wo + ox] = (ix >= 0 && ix < W) ? src[ix] : 0.f;
                    }
                }
            }
        }
    }
}

inline void col2im_acc(const float* col, int64_t C, int64_t H, int64_t W, int64_t c0, int64_t Cg, int64_t kh,
                       int64_t kw, int64_t stride, int64_t pad, int64_t Ho, int64_t Wo, float* dx) {
    for (int64_t c = 0; c < Cg; ++c) {
        float* xc = dx + (c0 + c) * H * W;
        for (int64_t ky = 0; ky < kh; ++ky) {
            for (int64_t kx = 0; kx < kw; ++kx) {
                const float* src = col + ((c * kh + ky) * kw + kx) * Ho * Wo;
                for (int64_t oy = 0; oy < Ho; ++oy) {
                    int64_t iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) continue;
                    for (int64_t ox = 0; ox < Wo; ++ox) {
                        int64_t ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < W) xc[iy * W + ix] += src[oy * Wo + ox];
                    }
                }
            }
        }
    }
}

inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const ConvSpec& cs = {}) {
    conv_check(x, w, b, cs);
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    int64_t O = w.dim(0), kh = w.dim(2), kw = w.dim(3), G = cs.groups;
    int64_t Cg = C / G, Og = O / G;
    int64_t Ho = (H + 2 * cs.pad - kh) / cs.stride + 1;
    int64_t Wo = (W + 2 * cs.pad - kw) / cs.stride + 1;
    Tensor out({N, O, Ho, Wo}, 0.f);
    std::vector<float> col(size_t(Cg * kh * kw) * size_t(Ho * Wo));
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t g = 0; g < G; ++g) {
            im2col(x.ptr() + n * C * H * W, C, H, W, g * Cg, Cg, kh, kw, cs.stride, cs.pad, Ho, Wo, col.data());
            gemm_acc(w.ptr() + g * Og * Cg * kh * kw, col.data(), out.ptr() + (n * O + g * Og) * Ho * Wo, Og,
                     Cg * kh * kw, Ho * Wo);
        }
    }
    if (b.numel() > 0) {
        for (int64_t n = 0; n < N; ++n)
            for (int64_t o = 0; o < O; ++o) {
                float bv = b.data[size_t(o)];
                float* p = out.ptr() + (n * O + o) * Ho * Wo;
                for (int64_t i = 0; i < Ho * Wo; ++i) p[i] += bv;
            }
    }
    return out;
}

struct ConvGrads {
    Tensor dx, dw, db;
};

inline ConvGrads conv2d_backward(const Tensor& x, const Tensor& w, bool has_bias, const Tensor& gout,
                                 const ConvSpec& cs = {}) {
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    int64_t O = w.dim(0), kh = w.dim(2), kw = w.dim(3), G = cs.groups;
    int64_t Cg = C / G, Og = O / G;
    int64_t Ho = gout.dim(2), Wo = gout.dim(3);
    ConvGrads gr;
    gr.dx = Tensor(x.shape, 0.f);
    gr.dw = Tensor(w.shape, 0.f);
    if (has_bias) gr.db = Tensor({O}, 0.f);
    int64_t K = Cg * kh * kw, P = Ho * Wo;
    std::vector<float> col(size_t(K) * size_t(P));
    std::vector<float> dcol(size_t(K) * size_t(P));
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t g = 0; g < G; ++g) {
            const float* go = gout.ptr() + (n * O + g * Og) * P;
            im2col(x.ptr() + n * C * H * W, C, H, W, g * Cg, Cg, kh, kw, cs.stride, cs.pad, Ho, Wo, col.data());
            // dW[o][k] += sum_p gout[o][p] * col[k][p]
            float* dwg = gr.dw.ptr() + g * Og * K;
            for (int64_t o = 0; o < Og; ++o) {
                const float* gorow = go + o * P;
                for (int64_t k = 0; k < K; ++k) {
                    const float* crow = col.data() + k * P;
                    float acc = 0.f;
                    for (int64_t p = 0; p < P; ++p) acc += gorow[p] * crow[p];
                    dwg[o * K + k] += acc;
                }
            }
            // dcol = W^T x gout
            std::fill(dcol.begin(), dcol.end(), 0.f);
            const float* wg = w.ptr() + g * Og * K;
            for (int64_t o = 0; o < Og; ++o) {
                const float* gorow = go + o * P;
                for (int64_t k = 0; k < K; ++k) {
                    float wv = wg[o * K + k];
                    float* drow = dcol.data() + k * P;
                    for (int64_t p = 0; p < P; ++p) drow[p] += wv * gorow[p];
                }
            }
            col2im_acc(dcol.data(), C, H, W, g * Cg, Cg, kh, kw, cs.stride, cs.pad, Ho, Wo,
                       gr.dx.ptr() + n * C * H * W);
        }
        if (has_bias) {
            for (int64_t o = 0; o < O; ++o) {
                const float* p = gout.ptr() + (n * O + o) * P;
                float acc = 0.f;
                for (int64_t i = 0; i < P; ++i) acc += p[i];
                gr.db.data[size_t(o)] += acc;
            }
        }
    }
    return gr;
}

// ---------------------------------------------------------------- max pool

struct PoolResult {
    Tensor out;
    std::vector<int64_t> argmax;  // flat index into the input plane, -1 when the window saw only padding
};

inline PoolResult max_pool2d(const Tensor& x, int64_t k, int64_t stride, int64_t pad) {
    check_rank(x, 4, "max_pool2d input");
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H + 2 * pad < k || W + 2 * pad < k)
        throw std::invalid_argument("max_pool2d: kernel " + std::to_string(k) + " larger than padded input " +
                                    x.shape_str());
    if (stride < 1) throw std::invalid_argument("max_pool2d: stride must be >= 1");
    int64_t Ho = (H + 2 * pad - k) / stride + 1;
    int64_t Wo = (W + 2 * pad - k) / stride + 1;
    PoolResult r;
    r.out = Tensor({N, C, Ho, Wo});
    r.argmax.assign(size_t(N * C * Ho * Wo), -1);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const float* xp = x.ptr() + (n * C + c) * H * W;
            float* op = r.out.ptr() + (n * C + c) * Ho * Wo;
            int64_t* ap = r.argmax.data() + (n * C + c) * Ho * Wo;
            for (int64_t oy = 0; oy < Ho; ++oy)
                for (int64_t ox = 0; ox < Wo; ++ox) {
                    float best = -std::numeric_limits<float>::infinity();
                    int64_t besti = -1;
                    for (int64_t ky = 0; ky < k; ++ky) {
                        int64_t iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= H) continue;
                        for (int64_t kx = 0; kx < k; ++kx) {
                            int64_t ix = ox * stride - pad + kx;
                            if (ix < 0 || ix >= W) continue;
                            float v = xp[iy * W + ix];
                            if (v > best) {
                                best = v;
                                besti = iy * W + ix;
                            }
                        }
                    }
                    op[oy * Wo + ox] = best;
                    ap[oy * Wo + ox] = besti;
                }
        }
    return r;
}

inline Tensor max_pool2d_backward(const Tensor& x, const PoolResult& fw, const Tensor& gout) {
    Tensor dx(x.shape, 0.f);
    int64_t planes = x.dim(0) * x.dim(1);
    int64_t P = fw.out.dim(2) * fw.out.dim(3), HW = x.dim(2) * x.dim(3);
    for (int64_t pl = 0; pl < planes; ++pl) {
        const float* go = gout.ptr() + pl * P;
        const int64_t* ap = fw.argmax.data() + pl * P;
        float* dp = dx.ptr() + pl * HW;
        for (int64_t i = 0; i < P; ++i)
            if (ap[i] >= 0) dp[ap[i]] += go[i];
    }
    return dx;
}

// ---------------------------------------------------------------- softmax

// Shift-invariant softmax along `axis`.
inline Tensor softmax(const Tensor& x, int axis) {
    if (axis < 0) axis += x.rank();
    if (axis < 0 || axis >= x.rank()) throw std::invalid_argument("softmax: axis out of range for " + x.shape_str());
    int64_t outer = 1, mid = x.dim(axis), inner = 1;
    for (int i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
    Tensor out(x.shape);
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t in = 0; in < inner; ++in) {
            const float* xp = x.ptr() + o * mid * inner + in;
            float* op = out.ptr() + o * mid * inner + in;
            float mx = -std::numeric_limits<float>::infinity();
            for (int64_t m = 0; m < mid; ++m) mx = std::max(mx, xp[m * inner]);
            double s = 0.0;
            for (int64_t m = 0; m < mid; ++m) {
                double e = std::exp(double(xp[m * inner]) - double(mx));
                op[m * inner] = float(e);
                s += e;
            }
            double r = 1.0 / s;
            for (int64_t m = 0; m < mid; ++m) op[m * inner] = float(double(op[m * inner]) * r);
        }
    return out;
}

// dx = (gout - sum(gout*y)) * y along axis, using the saved output y.
inline Tensor softmax_backward(const Tensor& y, const Tensor& gout, int axis) {
    if (axis < 0) axis += y.rank();
    int64_t outer = 1, mid = y.dim(axis), inner = 1;
    for (int i = 0; i < axis; ++i) outer *= y.dim(i);
    for (int i = axis + 1; i < y.rank(); ++i) inner *= y.dim(i);
    Tensor dx(y.shape);
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t in = 0; in < inner; ++in) {
            const float* yp = y.ptr() + o * mid * inner + in;
            const float* gp = gout.ptr() + o * mid * inner + in;
            float* dp = dx.ptr() + o * mid * inner + in;
            double dot = 0.0;
            for (int64_t m = 0; m < mid; ++m) dot += double(gp[m * inner]) * double(yp[m * inner]);
            for (int64_t m = 0; m < mid; ++m)
                dp[m * inner] = float((double(gp[m * inner]) - dot) * double(yp[m * inner]));
        }
    return dx;
}

// ---------------------------------------------------------------- layer norm

// Token-wise normalization over the channel axis of an NCHW map.
struct LayerNormResult {
    Tensor out;
    Tensor mean, rstd;  // (N,1,H,W) statistics saved for backward
};

inline LayerNormResult layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5) {
    check_rank(x, 4, "layer_norm input");
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (gamma.numel() != C || beta.numel() != C)
        throw std::invalid_argument("layer_norm: affine params " + gamma.shape_str() + "/" + beta.shape_str() +
                                    " do not match channels of " + x.shape_str());
    LayerNormResult r;
    r.out = Tensor(x.shape);
    r.mean = Tensor({N, 1, H, W});
    r.rstd = Tensor({N, 1, H, W});
    int64_t HW = H * W;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t t = 0; t < HW; ++t) {
            const float* xp = x.ptr() + n * C * HW + t;
            double mu = 0.0;
            for (int64_t c = 0; c < C; ++c) mu += xp[c * HW];
            mu /= double(C);
            double var = 0.0;
            for (int64_t c = 0; c < C; ++c) {
                double d = double(xp[c * HW]) - mu;
                var += d * d;
            }
            var /= double(C);
            double rs = 1.0 / std::sqrt(var + eps);
            r.mean.data[size_t(n * HW + t)] = float(mu);
            r.rstd.data[size_t(n * HW + t)] = float(rs);
            float* op = r.out.ptr() + n * C * HW + t;
            for (int64_t c = 0; c < C; ++c)
                op[c * HW] = float((double(xp[c * HW]) - mu) * rs * double(gamma.data[size_t(c)]) +
                                   double(beta.data[size_t(c)]));
        }
    return r;
}

struct LayerNormGrads {
    Tensor dx, dgamma, dbeta;
};

inline LayerNormGrads layer_norm_backward(const Tensor& x, const Tensor& gamma, const LayerNormResult& fw,
                                          const Tensor& gout) {
    int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    LayerNormGrads gr;
    gr.dx = Tensor(x.shape);
    gr.dgamma = Tensor({C}, 0.f);
    gr.dbeta = Tensor({C}, 0.f);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t t = 0; t < HW; ++t) {
            const float* xp = x.ptr() + n * C * HW + t;
            const float* gp = gout.ptr() + n * C * HW + t;
            double mu = fw.mean.data[size_t(n * HW + t)];
            double rs = fw.rstd.data[size_t(n * HW + t)];
            double sum_gg = 0.0, sum_ggx = 0.0;
            for (int64_t c = 0; c < C; ++c) {
                double xhat = (double(xp[c * HW]) - mu) * rs;
                double gg = double(gp[c * HW]) * double(gamma.data[size_t(c)]);
                sum_gg += gg;
                sum_ggx += gg * xhat;
                gr.dgamma.data[size_t(c)] += float(double(gp[c * HW]) * xhat);
                gr.dbeta.data[size_t(c)] += gp[c * HW];
            }
            double inv_c = 1.0 / double(C);
            float* dp = gr.dx.ptr() + n * C * HW + t;
            for (int64_t c = 0; c < C; ++c) {
                double xhat = (double(xp[c * HW]) - mu) * rs;
                double gg = double(gp[c * HW]) * double(gamma.data[size_t(c)]);
                dp[c * HW] = float(rs * (gg - inv_c * sum_gg - xhat * inv_c * sum_ggx));
            }
        }
    return gr;
}

// ---------------------------------------------------------------- gelu

// Exact erf form x * Phi(x).
inline Tensor gelu(const Tensor& x) {
    Tensor out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        double v = x.data[i];
        out.data[i] = float(v * 0.5 * (1.0 + std::erf(v * 0.70710678118654752440)));
    }
    return out;
}

inline Tensor gelu_backward(const Tensor& x, const Tensor& gout) {
    Tensor dx(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        double v = x.data[i];
        double phi = 0.5 * (1.0 + std::erf(v * 0.70710678118654752440));
        double pdf = 0.39894228040143267794 * std::exp(-0.5 * v * v);
        dx.data[i] = float(double(gout.data[i]) * (phi + v * pdf));
    }
    return dx;
}

// ---------------------------------------------------------------- pixel shuffle

inline Tensor pixel_shuffle(const Tensor& x, int64_t r) {
    check_rank(x, 4, "pixel_shuffle input");
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (r < 1 || C % (r * r) != 0)
        throw std::invalid_argument("pixel_shuffle: channels of " + x.shape_str() + " not divisible by r^2 with r=" +
                                    std::to_string(r));
    int64_t Co = C / (r * r);
    Tensor out({N, Co, H * r, W * r});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < Co; ++c)
            for (int64_t dy = 0; dy < r; ++dy)
                for (int64_t dx = 0; dx < r; ++dx) {
                    const float* src = x.ptr() + ((n * C + (c * r + dy) * r + dx) * H) * W;
                    for (int64_t h = 0; h < H; ++h) {
                        float* dst = out.ptr() + ((n * Co + c) * H * r + h * r + dy) * W * r + dx;
                        for (int64_t w = 0; w < W; ++w) dst[w * r] = src[h * W + w];
                    }
                }
    return out;
}

inline Tensor pixel_unshuffle(const Tensor& x, int64_t r) {
    check_rank(x, 4, "pixel_unshuffle input");
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (r < 1 || H % r != 0 || W % r != 0)
        throw std::invalid_argument("pixel_unshuffle: spatial extents of " + x.shape_str() +
                                    " not divisible by r=" + std::to_string(r));
    int64_t Ho = H / r, Wo = W / r;
    Tensor out({N, C * r * r, Ho, Wo});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t dy = 0; dy < r; ++dy)
                for (int64_t dx = 0; dx < r; ++dx) {
                    float* dst = out.ptr() + ((n * C * r * r + (c * r + dy) * r + dx) * Ho) * Wo;
                    for (int64_t h = 0; h < Ho; ++h) {
                        const float* src = x.ptr() + ((n * C + c) * H + h * r + dy) * W + dx;
                        for (int64_t w = 0; w < Wo; ++w) dst[h * Wo + w] = src[w * r];
                    }
                }
    return out;
}

// ---------------------------------------------------------------- bicubic

namespace detail {

inline double keys_cubic(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

struct CubicTaps {
    std::vector<int64_t> idx;   // 4 per output position, clamped to the edge
    std::vector<double> wgt;    // 4 per output position, normalized
};

inline CubicTaps cubic_taps(int64_t in, int64_t out) {
    CubicTaps t;
    t.idx.resize(size_t(out) * 4);
    t.wgt.resize(size_t(out) * 4);
    double scale = double(in) / double(out);
    for (int64_t o = 0; o < out; ++o) {
        double src = (double(o) + 0.5) * scale - 0.5;
        int64_t base = int64_t(std::floor(src)) - 1;
        double sum = 0.0;
        for (int j = 0; j < 4; ++j) {
            double w = keys_cubic(src - double(base + j));
            t.wgt[size_t(o * 4 + j)] = w;
            sum += w;
        }
        for (int j = 0; j < 4; ++j) {
            t.wgt[size_t(o * 4 + j)] /= sum;
            t.idx[size_t(o * 4 + j)] = std::clamp<int64_t>(base + j, 0, in - 1);
        }
    }
    return t;
}

}  // namespace detail

// Separable Keys (a = -0.5) resampling with replicated edges.
inline Tensor bicubic_resize(const Tensor& x, int64_t out_h, int64_t out_w) {
    check_rank(x, 4, "bicubic_resize input");
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("bicubic_resize: output extents must be >= 1");
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    auto tx = detail::cubic_taps(W, out_w);
    auto ty = detail::cubic_taps(H, out_h);
    Tensor mid({N, C, H, out_w});
    for (int64_t p = 0; p < N * C; ++p) {
        const float* src = x.ptr() + p * H * W;
        float* dst = mid.ptr() + p * H * out_w;
        for (int64_t h = 0; h < H; ++h)
            for (int64_t o = 0; o < out_w; ++o) {
                double acc = 0.0;
                for (int j = 0; j < 4; ++j)
                    acc += tx.wgt[size_t(o * 4 + j)] * double(src[h * W + tx.idx[size_t(o * 4 + j)]]);
                dst[h * out_w + o] = float(acc);
            }
    }
    Tensor out({N, C, out_h, out_w});
    for (int64_t p = 0; p < N * C; ++p) {
        const float* src = mid.ptr() + p * H * out_w;
        float* dst = out.ptr() + p * out_h * out_w;
        for (int64_t o = 0; o < out_h; ++o)
            for (int64_t w = 0; w < out_w; ++w) {
                double acc = 0.0;
                for (int j = 0; j < 4; ++j)
                    acc += ty.wgt[size_t(o * 4 + j)] * double(src[ty.idx[size_t(o * 4 + j)] * out_w + w]);
                dst[o * out_w + w] = float(acc);
            }
    }
    return out;
}

// ---------------------------------------------------------------- mean filter

// Odd-window box filter, replicate padding.
inline Tensor mean_filter(const Tensor& x, int64_t theta) {
    check_rank(x, 4, "mean_filter input");
    if (theta < 1 || theta % 2 == 0)
        throw std::invalid_argument("mean_filter: window must be odd and positive, got " + std::to_string(theta));
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    int64_t r = theta / 2;
    Tensor out(x.shape);
    double inv = 1.0 / double(theta * theta);
    for (int64_t p = 0; p < N * C; ++p) {
        const float* src = x.ptr() + p * H * W;
        float* dst = out.ptr() + p * H * W;
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x2 = 0; x2 < W; ++x2) {
                double acc = 0.0;
                for (int64_t dy = -r; dy <= r; ++dy) {
                    int64_t iy = std::clamp<int64_t>(y + dy, 0, H - 1);
                    for (int64_t dx = -r; dx <= r; ++dx) {
                        int64_t ix = std::clamp<int64_t>(x2 + dx, 0, W - 1);
                        acc += src[iy * W + ix];
                    }
                }
                dst[y * W + x2] = float(acc * inv);
            }
    }
    return out;
}

// ---------------------------------------------------------------- batched matmul

// out (B,M,N) = a (B,M,K) x b (B,K,N), or a x b^T with trans_b and b (B,N,K).
inline Tensor bmm(const Tensor& a, const Tensor& b, bool trans_b = false) {
    check_rank(a, 3, "bmm lhs");
    check_rank(b, 3, "bmm rhs");
    int64_t B = a.dim(0), M = a.dim(1), K = a.dim(2);
    int64_t N = trans_b ? b.dim(1) : b.dim(2);
    int64_t Kb = trans_b ? b.dim(2) : b.dim(1);
    if (b.dim(0) != B || Kb != K)
        throw std::invalid_argument("bmm: shapes " + a.shape_str() + " and " + b.shape_str() + " incompatible");
    Tensor out({B, M, N}, 0.f);
    for (int64_t bi = 0; bi < B; ++bi) {
        const float* ap = a.ptr() + bi * M * K;
        const float* bp = b.ptr() + bi * (trans_b ? N * K : K * N);
        float* op = out.ptr() + bi * M * N;
        if (trans_b) {
            for (int64_t m = 0; m < M; ++m)
                for (int64_t n = 0; n < N; ++n) {
                    const float* ar = ap + m * K;
                    const float* br = bp + n * K;
                    float acc = 0.f;
                    for (int64_t k = 0; k < K; ++k) acc += ar[k] * br[k];
                    op[m * N + n] = acc;
                }
        } else {
            gemm_acc(ap, bp, op, M, K, N);
        }
    }
    return out;
}

struct BmmGrads {
    Tensor da, db;
};

inline BmmGrads bmm_backward(const Tensor& a, const Tensor& b, bool trans_b, const Tensor& gout) {
    int64_t B = a.dim(0), M = a.dim(1), K = a.dim(2);
    int64_t N = gout.dim(2);
    BmmGrads gr;
    gr.da = Tensor(a.shape, 0.f);
    gr.db = Tensor(b.shape, 0.f);
    for (int64_t bi = 0; bi < B; ++bi) {
        const float* ap = a.ptr() + bi * M * K;
        const float* gp = gout.ptr() + bi * M * N;
        float* dap = gr.da.ptr() + bi * M * K;
        if (trans_b) {
            const float* bp = b.ptr() + bi * N * K;
            float* dbp = gr.db.ptr() + bi * N * K;
            for (int64_t m = 0; m < M; ++m)
                for (int64_t n = 0; n < N; ++n) {
                    float g = gp[m * N + n];
                    const float* br = bp + n * K;
                    const float* ar = ap + m * K;
                    float* dar = dap + m * K;
                    float* dbr = dbp + n * K;
                    for (int64_t k = 0; k < K; ++k) {
                        dar[k] += g * br[k];
                        dbr[k] += g * ar[k];
                    }
                }
        } else {
            const float* bp = b.ptr() + bi * K * N;
            float* dbp = gr.db.ptr() + bi * K * N;
            // da[m][k] = sum_n g[m][n] b[k][n]; db[k][n] = sum_m a[m][k] g[m][n]
            for (int64_t m = 0; m < M; ++m)
                for (int64_t k = 0; k < K; ++k) {
                    const float* gr_row = gp + m * N;
                    const float* br = bp + k * N;
                    float acc = 0.f;
                    for (int64_t n = 0; n < N; ++n) acc += gr_row[n] * br[n];
                    dap[m * K + k] += acc;
                }
            for (int64_t m = 0; m < M; ++m)
                for (int64_t k = 0; k < K; ++k) {
                    float av = ap[m * K + k];
                    const float* gr_row = gp + m * N;
                    float* dbr = dbp + k * N;
                    for (int64_t n = 0; n < N; ++n) dbr[n] += av * gr_row[n];
                }
        }
    }
    return gr;
}

// ---------------------------------------------------------------- linear

// out (R,O) = x (R,I) x w (O,I)^T + b.
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    check_rank(x, 2, "linear input");
    check_rank(w, 2, "linear weight");
    int64_t R = x.dim(0), I = x.dim(1), O = w.dim(0);
    if (w.dim(1) != I)
        throw std::invalid_argument("linear: input " + x.shape_str() + " incompatible with weight " + w.shape_str());
    Tensor out({R, O});
    for (int64_t r = 0; r < R; ++r)
        for (int64_t o = 0; o < O; ++o) {
            const float* xr = x.ptr() + r * I;
            const float* wr = w.ptr() + o * I;
            float acc = b.numel() > 0 ? b.data[size_t(o)] : 0.f;
            for (int64_t i = 0; i < I; ++i) acc += xr[i] * wr[i];
            out.at(r, o) = acc;
        }
    return out;
}

struct LinearGrads {
    Tensor dx, dw, db;
};

inline LinearGrads linear_backward(const Tensor& x, const Tensor& w, bool has_bias, const Tensor& gout) {
    int64_t R = x.dim(0), I = x.dim(1), O = w.dim(0);
    LinearGrads gr;
    gr.dx = Tensor(x.shape, 0.f);
    gr.dw = Tensor(w.shape, 0.f);
    if (has_bias) gr.db = Tensor({O}, 0.f);
    for (int64_t r = 0; r < R; ++r)
        for (int64_t o = 0; o < O; ++o) {
            float g = gout.at(r, o);
            const float* xr = x.ptr() + r * I;
            const float* wr = w.ptr() + o * I;
            float* dxr = gr.dx.ptr() + r * I;
            float* dwr = gr.dw.ptr() + o * I;
            for (int64_t i = 0; i < I; ++i) {
                dxr[i] += g * wr[i];
                dwr[i] += g * xr[i];
            }
            if (has_bias) gr.db.data[size_t(o)] += g;
        }
    return gr;
}

// ---------------------------------------------------------------- padding, crop, roll

namespace detail {
inline int64_t reflect_index(int64_t i, int64_t n) {
    // Reflection without repeating the border sample; valid while |i| < 2n-1.
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}
}  // namespace detail

inline Tensor pad_reflect(const Tensor& x, int64_t top, int64_t bottom, int64_t left, int64_t right) {
    check_rank(x, 4, "pad_reflect input");
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (top >= H || bottom >= H || left >= W || right >= W)
        throw std::invalid_argument("pad_reflect: pad exceeds input extents " + x.shape_str());
    Tensor out({N, C, H + top + bottom, W + left + right});
    int64_t Ho = out.dim(2), Wo = out.dim(3);
    for (int64_t p = 0; p < N * C; ++p) {
        const float* src = x.ptr() + p * H * W;
        float* dst = out.ptr() + p * Ho * Wo;
        for (int64_t y = 0; y < Ho; ++y) {
            int64_t iy = detail::reflect_index(y - top, H);
            for (int64_t x2 = 0; x2 < Wo; ++x2)
                dst[y * Wo + x2] = src[iy * W + detail::reflect_index(x2 - left, W)];
        }
    }
    return out;
}

inline Tensor pad_reflect_backward(const Tensor& x, int64_t top, int64_t bottom, int64_t left, int64_t right,
                                   const Tensor& gout) {
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    int64_t Ho = gout.dim(2), Wo = gout.dim(3);
    Tensor dx(x.shape, 0.f);
    for (int64_t p = 0; p < N * C; ++p) {
        const float* go = gout.ptr() + p * Ho * Wo;
        float* dp = dx.ptr() + p * H * W;
        for (int64_t y = 0; y < Ho; ++y) {
            int64_t iy = detail::reflect_index(y - top, H);
            for (int64_t x2 = 0; x2 < Wo; ++x2)
                dp[iy * W + detail::reflect_index(x2 - left, W)] += go[y * Wo + x2];
        }
    }
    return dx;
}

inline Tensor crop(const Tensor& x, int64_t top, int64_t left, int64_t h, int64_t w) {
    check_rank(x, 4, "crop input");
    if (top < 0 || left < 0 || top + h > x.dim(2) || left + w > x.dim(3))
        throw std::invalid_argument("crop: window outside input " + x.shape_str());
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    Tensor out({N, C, h, w});
    for (int64_t p = 0; p < N * C; ++p)
        for (int64_t y = 0; y < h; ++y)
            std::memcpy(out.ptr() + (p * h + y) * w, x.ptr() + (p * H + top + y) * W + left, size_t(w) * sizeof(float));
    return out;
}

inline Tensor crop_backward(const Tensor& x, int64_t top, int64_t left, const Tensor& gout) {
    Tensor dx(x.shape, 0.f);
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    int64_t h = gout.dim(2), w = gout.dim(3);
    for (int64_t p = 0; p < N * C; ++p)
        for (int64_t y = 0; y < h; ++y)
            std::memcpy(dx.ptr() + (p * H + top + y) * W + left, gout.ptr() + (p * h + y) * w,
                        size_t(w) * sizeof(float));
    return dx;
}

// Cyclic shift; positive dy/dx move content down/right.
inline Tensor roll(const Tensor& x, int64_t dy, int64_t dx) {
    check_rank(x, 4, "roll input");
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    dy = ((dy % H) + H) % H;
    dx = ((dx % W) + W) % W;
    Tensor out(x.shape);
    for (int64_t p = 0; p < N * C; ++p) {
        const float* src = x.ptr() + p * H * W;
        float* dst = out.ptr() + p * H * W;
        for (int64_t y = 0; y < H; ++y) {
            int64_t sy = (y - dy + H) % H;
            for (int64_t x2 = 0; x2 < W; ++x2) dst[y * W + x2] = src[sy * W + (x2 - dx + W) % W];
        }
    }
    return out;
}

// ---------------------------------------------------------------- windows

// (N,C,H,W) -> (N*nWh*nWw, wh*ww, C); windows row-major, tokens row-major.
inline Tensor window_partition(const Tensor& x, int64_t wh, int64_t ww) {
    check_rank(x, 4, "window_partition input");
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % wh != 0 || W % ww != 0)
        throw std::invalid_argument("window_partition: input " + x.shape_str() + " not divisible by window " +
                                    std::to_string(wh) + "x" + std::to_string(ww));
    int64_t nh = H / wh, nw = W / ww;
    Tensor out({N * nh * nw, wh * ww, C});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t wy = 0; wy < nh; ++wy)
            for (int64_t wx = 0; wx < nw; ++wx) {
                int64_t b = (n * nh + wy) * nw + wx;
                for (int64_t c = 0; c < C; ++c) {
                    const float* src = x.ptr() + ((n * C + c) * H + wy * wh) * W + wx * ww;
                    float* dst = out.ptr() + (b * wh * ww) * C + c;
                    for (int64_t ty = 0; ty < wh; ++ty)
                        for (int64_t tx = 0; tx < ww; ++tx) dst[(ty * ww + tx) * C] = src[ty * W + tx];
                }
            }
    return out;
}

inline Tensor window_merge(const Tensor& win, int64_t wh, int64_t ww, int64_t N, int64_t C, int64_t H, int64_t W) {
    int64_t nh = H / wh, nw = W / ww;
    if (win.dim(0) != N * nh * nw || win.dim(1) != wh * ww || win.dim(2) != C)
        throw std::invalid_argument("window_merge: windows " + win.shape_str() + " do not tile a " +
                                    std::to_string(H) + "x" + std::to_string(W) + " map");
    Tensor out({N, C, H, W});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t wy = 0; wy < nh; ++wy)
            for (int64_t wx = 0; wx < nw; ++wx) {
                int64_t b = (n * nh + wy) * nw + wx;
                for (int64_t c = 0; c < C; ++c) {
                    float* dst = out.ptr() + ((n * C + c) * H + wy * wh) * W + wx * ww;
                    const float* src = win.ptr() + (b * wh * ww) * C + c;
                    for (int64_t ty = 0; ty < wh; ++ty)
                        for (int64_t tx = 0; tx < ww; ++tx) dst[ty * W + tx] = src[(ty * ww + tx) * C];
                }
            }
    return out;
}

// ---------------------------------------------------------------- permute

inline Tensor permute(const Tensor& x, const std::vector<int>& perm) {
    if (int(perm.size()) != x.rank()) throw std::invalid_argument("permute: rank mismatch for " + x.shape_str());
    int r = x.rank();
    std::vector<int64_t> oshape(size_t(r), 0);
    for (int i = 0; i < r; ++i) oshape[size_t(i)] = x.dim(perm[size_t(i)]);
    Tensor out;
    out.shape = oshape;
    out.data.resize(x.data.size());
    std::vector<int64_t> istride(size_t(r), 1);
    for (int i = r - 2; i >= 0; --i) istride[size_t(i)] = istride[size_t(i + 1)] * x.dim(i + 1);
    int64_t total = x.numel();
    for (int64_t o = 0; o < total; ++o) {
        int64_t src = 0, tmp = o;
        for (int i = r - 1; i >= 0; --i) {
            int64_t digit = tmp % oshape[size_t(i)];
            tmp /= oshape[size_t(i)];
            src += digit * istride[size_t(perm[size_t(i)])];
        }
        out.data[size_t(o)] = x.data[size_t(src)];
    }
    return out;
}

inline std::vector<int> inverse_perm(const std::vector<int>& perm) {
    std::vector<int> inv(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) inv[size_t(perm[i])] = int(i);
    return inv;
}

// ---------------------------------------------------------------- elementwise

inline Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out(a.shape);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a.shape);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a.shape);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

inline Tensor scale(const Tensor& a, double s) {
    Tensor out(a.shape);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = float(double(a.data[i]) * s);
    return out;
}

inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
    check_rank(a, 4, "concat_channels lhs");
    check_rank(b, 4, "concat_channels rhs");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
        throw std::invalid_argument("concat_channels: " + a.shape_str() + " vs " + b.shape_str());
    int64_t N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), HW = a.dim(2) * a.dim(3);
    Tensor out({N, Ca + Cb, a.dim(2), a.dim(3)});
    for (int64_t n = 0; n < N; ++n) {
        std::memcpy(out.ptr() + n * (Ca + Cb) * HW, a.ptr() + n * Ca * HW, size_t(Ca * HW) * sizeof(float));
        std::memcpy(out.ptr() + (n * (Ca + Cb) + Ca) * HW, b.ptr() + n * Cb * HW, size_t(Cb * HW) * sizeof(float));
    }
    return out;
}

inline Tensor slice_channels(const Tensor& x, int64_t c0, int64_t c1) {
    check_rank(x, 4, "slice_channels input");
    if (c0 < 0 || c1 <= c0 || c1 > x.dim(1))
        throw std::invalid_argument("slice_channels: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                                    ") outside " + x.shape_str());
    int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    Tensor out({N, c1 - c0, x.dim(2), x.dim(3)});
    for (int64_t n = 0; n < N; ++n)
        std::memcpy(out.ptr() + n * (c1 - c0) * HW, x.ptr() + (n * C + c0) * HW,
                    size_t((c1 - c0) * HW) * sizeof(float));
    return out;
}

}  // namespace craft::ops
