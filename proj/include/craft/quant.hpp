#pragma once

#include <cmath>
#include <string>

#include "autograd.hpp"
#include "fft.hpp"

namespace craft {

enum class QuantKind : uint8_t { weight = 0, activation = 1 };
enum class Criterion : uint8_t { feature = 0, fgo = 1 };

// Asymmetric uniform quantizer over [l, u]. bits == 32 is the pass-through sentinel.
struct QuantParams {
    float l = 0.f;
    float u = 1.f;
    int bits = 8;

    double qmax() const { return std::pow(2.0, double(bits)) - 1.0; }
    double scale() const { return (double(u) - double(l)) / qmax(); }
    int64_t zero_point() const {
        double zp = -double(l) * qmax() / (double(u) - double(l));
        return int64_t(std::clamp(std::nearbyint(zp), 0.0, qmax()));
    }
    void validate() const {
        if (bits != 32 && (bits < 2 || bits > 16))
            throw std::invalid_argument("quant: bits must be in [2,16] or the 32 sentinel, got " +
                                        std::to_string(bits));
        if (!(l < u)) throw std::invalid_argument("quant: need l < u, got l=" + std::to_string(l) +
                                                  " u=" + std::to_string(u));
    }
};

// Ties round to even, matching std::nearbyint under the default rounding mode.
inline double half_even(double x) { return std::nearbyint(x); }

inline float fake_quantize_value(double x, double inv_scale, double scale, double zp, double qm) {
    double q = half_even(x * inv_scale) + zp;
    q = std::clamp(q, 0.0, qm);
    return float((q - zp) * scale);
}

inline Tensor fake_quantize(const Tensor& x, const QuantParams& qp) {
    qp.validate();
    if (qp.bits == 32) return x;
    double qm = qp.qmax();
    double scale = qp.scale();
    double inv = qm / (double(qp.u) - double(qp.l));
    double zp = double(qp.zero_point());
    Tensor out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i)
        out.data[i] = fake_quantize_value(double(x.data[i]), inv, scale, zp, qm);
    return out;
}

// Quantizer with straight-through gradients. dx is exactly 1 in range and 0 when
// saturated; boundary gradients use the round-residual rule, with q = (x-l)/scale:
//   in range:     dl = (q - round(q))/qmax,  du = (round(q) - q)/qmax
//   clipped low:  dl = 1                     clipped high: du = 1
inline Var fq_ste(Tape& t, Var x, Var l, Var u, int bits) {
    QuantParams qp{t.val(l).data[0], t.val(u).data[0], bits};
    Tensor y = fake_quantize(t.val(x), qp);
    bool need = t.needs(x) || t.needs(l) || t.needs(u);
    if (!t.recording || !need) return t.emit(std::move(y), false, {});
    int xi = x.id, li = l.id, ui = u.id;
    Var self = t.emit(std::move(y), true, {});
    t.set_back(self, [=](Tape& tp) {
        const Tensor& g = *tp.grad_ptr(self.id);
        const Tensor& xv = tp.val(xi);
        if (bits == 32) {
            tp.accumulate(xi, g);
            return;
        }
        double lv = tp.val(li).data[0], uv = tp.val(ui).data[0];
        double qm = std::pow(2.0, double(bits)) - 1.0;
        double inv = qm / (uv - lv);
        Tensor dx(xv.shape);
        double dl = 0.0, du = 0.0;
        for (size_t i = 0; i < xv.data.size(); ++i) {
            double q = (double(xv.data[i]) - lv) * inv;
            double gi = g.data[i];
            if (q < 0.0) {
                dx.data[i] = 0.f;
                dl += gi;
            } else if (q > qm) {
                dx.data[i] = 0.f;
                du += gi;
            } else {
                dx.data[i] = float(gi);
                double r = q - half_even(q);
                dl += gi * (r / qm);
                du += gi * (-r / qm);
            }
        }
        tp.accumulate(xi, dx);
        Tensor dlt({1}), dut({1});
        dlt.data[0] = float(dl);
        dut.data[0] = float(du);
        tp.accumulate(li, dlt);
        tp.accumulate(ui, dut);
    });
    return self;
}

// ------------------------------------------------------------------ criterion

namespace quant_detail {

// Planes of a tensor viewed as channels: rank 4 -> N*C planes of H*W, rank 3 ->
// dim0 planes, rank 2 -> one H x W plane, rank 1 -> one plane.
inline void plane_view(const Tensor& x, int64_t& planes, int64_t& ph, int64_t& pw) {
    if (x.rank() == 4) {
        planes = x.dim(0) * x.dim(1);
        ph = x.dim(2);
        pw = x.dim(3);
    } else if (x.rank() == 3) {
        planes = x.dim(0);
        ph = x.dim(1);
        pw = x.dim(2);
    } else if (x.rank() == 2) {
        planes = 1;
        ph = x.dim(0);
        pw = x.dim(1);
    } else {
        planes = 1;
        ph = 1;
        pw = x.numel();
    }
}

}  // namespace quant_detail

// Feature-consistency score between x and its quantized copy: mean absolute
// error either in the spatial domain (feature) or between unnormalized FFT
// magnitude spectra per channel (fgo).
inline double fcmp(int bits, float l, float u, Criterion crit, const Tensor& x) {
    QuantParams qp{l, u, bits};
    Tensor xq = fake_quantize(x, qp);
    int64_t planes, ph, pw;
    quant_detail::plane_view(x, planes, ph, pw);
    if (crit == Criterion::feature) {
        double acc = 0.0;
        for (size_t i = 0; i < x.data.size(); ++i) acc += std::abs(double(x.data[i]) - double(xq.data[i]));
        return acc / double(x.numel());
    }
    double total = 0.0;
    for (int64_t p = 0; p < planes; ++p) {
        Tensor a({ph, pw}), b({ph, pw});
        std::memcpy(a.ptr(), x.ptr() + p * ph * pw, size_t(ph * pw) * sizeof(float));
        std::memcpy(b.ptr(), xq.ptr() + p * ph * pw, size_t(ph * pw) * sizeof(float));
        ComplexGrid fa = fft2(a), fb = fft2(b);
        double acc = 0.0;
        for (int64_t i = 0; i < ph * pw; ++i) {
            double ma = std::hypot(double(fa.re[size_t(i)]), double(fa.im[size_t(i)]));
            double mb = std::hypot(double(fb.re[size_t(i)]), double(fb.im[size_t(i)]));
            acc += std::abs(ma - mb);
        }
        total += acc / double(ph * pw);
    }
    return total / double(planes);
}

// ------------------------------------------------------------------ calibrators

struct Bounds {
    float l = 0.f, u = 1.f;
};

inline Bounds guard_bounds(double lo, double hi) {
    if (!(hi > lo)) hi = lo + 1e-6;
    return Bounds{float(lo), float(hi)};
}

inline Bounds minmax_calibrate(const Tensor& x) {
    double lo = x.data[0], hi = x.data[0];
    for (float v : x.data) {
        lo = std::min(lo, double(v));
        hi = std::max(hi, double(v));
    }
    return guard_bounds(lo, hi);
}

// Two-sided linear-interpolated quantiles at 1-p and p.
inline Bounds percentile_calibrate(const Tensor& x, double p = 0.999) {
    if (!(p > 0.5) || p > 1.0)
        throw std::invalid_argument("percentile_calibrate: p must be in (0.5, 1], got " + std::to_string(p));
    std::vector<float> sorted(x.data);
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        double pos = q * double(sorted.size() - 1);
        size_t lo = size_t(std::floor(pos));
        size_t hi = std::min(lo + 1, sorted.size() - 1);
        double frac = pos - double(lo);
        return double(sorted[lo]) * (1.0 - frac) + double(sorted[hi]) * frac;
    };
    return guard_bounds(quantile(1.0 - p), quantile(p));
}

// Greedy asymmetric boundary search: start from min/max, shrink one side by a
// fixed step while the criterion improves, keep the best scoring boundaries.
inline Bounds adc(const Tensor& x, int bits, Criterion crit) {
    double lo = x.data[0], hi = x.data[0];
    for (float v : x.data) {
        lo = std::min(lo, double(v));
        hi = std::max(hi, double(v));
    }
    if (!(hi > lo)) return Bounds{float(lo), float(lo + 1e-6)};
    if (bits == 32) return Bounds{float(lo), float(hi)};
    double delta = (hi - lo) / std::pow(2.0, double(bits));
    double l_best = lo, u_best = hi;
    double best = fcmp(bits, float(lo), float(hi), crit, x);
    while (u_best - l_best > 2.0 * delta) {
        double gl = fcmp(bits, float(l_best + delta), float(u_best), crit, x);
        double gr = fcmp(bits, float(l_best), float(u_best - delta), crit, x);
        double cand = std::min(gl, gr);
        if (!(cand < best)) break;
        if (gl < gr)
            l_best += delta;
        else
            u_best -= delta;
        best = cand;
    }
    return Bounds{float(l_best), float(u_best)};
}

// EMA fold used when calibrating across samples: cur <- beta*cur + (1-beta)*next.
inline float ema_update(float cur, float next, double beta) {
    return float(beta * double(cur) + (1.0 - beta) * double(next));
}

// ------------------------------------------------------------------ sites

struct QuantSite {
    std::string name;
    QuantKind kind = QuantKind::activation;
    Criterion crit = Criterion::feature;
    int bits = 8;
    Parameter l, u;
    // Per-output-channel bounds for weight sites; when present they replace the
    // scalar pair at apply time and the site is excluded from refinement.
    std::vector<float> channel_l, channel_u;
    bool calibrated = false;
    bool ema_started = false;

    void set_bounds(Bounds b) {
        l = Parameter(Tensor({1}, b.l));
        u = Parameter(Tensor({1}, b.u));
        calibrated = true;
    }
    Bounds bounds() const { return Bounds{l.value.data[0], u.value.data[0]}; }
    bool per_channel() const { return !channel_l.empty(); }
};

enum class QuantMode { off, observe, apply };

// Threaded through the model forward; every conv/linear/matmul operand passes
// process() exactly once per evaluation, in a deterministic order.
class QuantContext {
  public:
    QuantMode mode = QuantMode::off;
    int default_bits = 8;
    bool force_feature = false;
    std::function<void(QuantSite&, const Tensor&)> observer;

    std::vector<QuantSite>& sites() { return sites_; }
    const std::vector<QuantSite>& sites() const { return sites_; }

    QuantSite* find(const std::string& name) {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : &sites_[it->second];
    }

    Var process(Tape& t, const std::string& name, QuantKind kind, Var v) {
        if (mode == QuantMode::off) return v;
        QuantSite* site = find(name);
        if (mode == QuantMode::observe) {
            if (!site) site = register_site(name, kind);
            if (observer) observer(*site, t.val(v));
            return v;
        }
        if (!site) throw std::runtime_error("quant: site '" + name + "' missing from calibration");
        if (site->bits == 32) return v;
        if (!site->calibrated) throw std::runtime_error("quant: site '" + name + "' not calibrated");
        if (site->per_channel()) {
            const Tensor& w = t.val(v);
            if (w.dim(0) != int64_t(site->channel_l.size()))
                throw std::runtime_error("quant: per-channel bound count mismatch at site '" + name + "'");
            Tensor out(w.shape);
            int64_t per = w.numel() / w.dim(0);
            for (int64_t c = 0; c < w.dim(0); ++c) {
                QuantParams qp{site->channel_l[size_t(c)], site->channel_u[size_t(c)], site->bits};
                qp.validate();
                double qm = qp.qmax();
                double inv = qm / (double(qp.u) - double(qp.l));
                double zp = double(qp.zero_point());
                double sc = qp.scale();
                for (int64_t i = c * per; i < (c + 1) * per; ++i)
                    out.data[size_t(i)] = fake_quantize_value(double(w.data[size_t(i)]), inv, sc, zp, qm);
            }
            return t.emit(std::move(out), false, {});
        }
        return fq_ste(t, v, t.param(site->l), t.param(site->u), site->bits);
    }

    QuantSite* register_site(const std::string& name, QuantKind kind) {
        QuantSite s;
        s.name = name;
        s.kind = kind;
        bool io = name == "model.in" || name == "model.out";
        bool fgo = kind == QuantKind::activation && (io || name.find(".hferb.") != std::string::npos);
        s.crit = (fgo && !force_feature) ? Criterion::fgo : Criterion::feature;
        s.bits = default_bits;
        if (io && default_bits != 32) s.bits = 8;
        index_[name] = sites_.size();
        sites_.push_back(std::move(s));
        return &sites_.back();
    }

    std::vector<Parameter*> boundary_params() {
        std::vector<Parameter*> ps;
        for (auto& s : sites_) {
            if (!s.calibrated || s.bits == 32 || s.per_channel()) continue;
            ps.push_back(&s.l);
            ps.push_back(&s.u);
        }
        return ps;
    }

  private:
    std::vector<QuantSite> sites_;
    std::unordered_map<std::string, size_t> index_;
};

}  // namespace craft
