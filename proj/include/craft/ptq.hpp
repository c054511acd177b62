#pragma once

#include "io.hpp"
#include "model.hpp"
#include "quant.hpp"

namespace craft {

// fgo:        boundary search scores frequency-tagged sites in the spectrum,
//             the rest in feature space, then refines all boundaries.
// feature:    boundary search scores every site in feature space, then refines.
// minmax:     plain min/max calibration, no search, no refinement.
// percentile: two-sided quantile clipping, no search, no refinement.
enum class PtqMethod { fgo, feature, minmax, percentile };

inline const char* ptq_method_name(PtqMethod m) {
    switch (m) {
        case PtqMethod::fgo: return "fgo";
        case PtqMethod::feature: return "feature";
        case PtqMethod::minmax: return "minmax";
        case PtqMethod::percentile: return "percentile";
    }
    throw std::invalid_argument("ptq: unknown method");
}

inline PtqMethod ptq_method_from(const std::string& s) {
    if (s == "fgo") return PtqMethod::fgo;
    if (s == "feature") return PtqMethod::feature;
    if (s == "minmax") return PtqMethod::minmax;
    if (s == "percentile") return PtqMethod::percentile;
    throw std::invalid_argument("ptq: unknown method '" + s + "'");
}

struct PtqConfig {
    int bits = 8;
    PtqMethod method = PtqMethod::fgo;
    int epochs = 10;       // boundary refinement epochs; 0 disables the stage
    int batch = 2;
    double lr = -1.0;      // negative -> pick by width
    double ema_beta = 0.9;
    double percentile_p = 0.999;
    bool per_channel_weights = false;

    double resolved_lr() const {
        if (lr >= 0.0) return lr;
        return bits >= 8 ? 2e-4 : 2e-3;
    }

    void validate() const {
        QuantParams{0.f, 1.f, bits}.validate();
        if (epochs < 0) throw std::invalid_argument("ptq: epochs must be >= 0");
        if (batch < 1) throw std::invalid_argument("ptq: batch must be >= 1");
        if (!(ema_beta >= 0.0 && ema_beta < 1.0))
            throw std::invalid_argument("ptq: ema_beta must be in [0, 1)");
    }
};

struct PtqResult {
    QuantContext ctx;
    std::vector<double> epoch_losses;  // mean refinement loss per epoch, empty when skipped
    double initial_loss = 0.0;         // clean-pass calibration loss before refinement
    double final_loss = 0.0;           // and after; equal to initial when refinement reverts
    bool reverted = false;
};

namespace ptq_detail {

inline Tensor as_batch(const Tensor& x) {
    if (x.rank() == 4) return x;
    check_rank(x, 3, "ptq calibration image");
    return x.reshaped({1, x.dim(0), x.dim(1), x.dim(2)});
}

// Stack rank-3 images [lo, hi) with identical shapes into one batch.
inline Tensor stack3(const std::vector<Tensor>& xs, size_t lo, size_t hi) {
    const Tensor& first = xs[lo];
    Tensor out({int64_t(hi - lo), first.dim(0), first.dim(1), first.dim(2)});
    size_t per = first.data.size();
    for (size_t i = lo; i < hi; ++i)
        std::copy(xs[i].data.begin(), xs[i].data.end(), out.data.begin() + int64_t((i - lo) * per));
    return out;
}

inline Bounds weight_bounds(const Tensor& w, int bits, PtqMethod method) {
    if (method == PtqMethod::fgo || method == PtqMethod::feature)
        return adc(w, bits, Criterion::feature);
    return minmax_calibrate(w);
}

inline void calibrate_weight(QuantSite& s, const Tensor& w, const PtqConfig& cfg) {
    if (cfg.per_channel_weights && w.rank() >= 2) {
        int64_t oc = w.dim(0);
        int64_t per = w.numel() / oc;
        s.channel_l.resize(size_t(oc));
        s.channel_u.resize(size_t(oc));
        Tensor slice({per});
        for (int64_t c = 0; c < oc; ++c) {
            std::copy(w.data.begin() + c * per, w.data.begin() + (c + 1) * per, slice.data.begin());
            Bounds b = weight_bounds(slice, s.bits, cfg.method);
            s.channel_l[size_t(c)] = b.l;
            s.channel_u[size_t(c)] = b.u;
        }
    }
    s.set_bounds(weight_bounds(w, s.bits, cfg.method));
}

inline void calibrate_activation(QuantSite& s, const Tensor& x, const PtqConfig& cfg) {
    Bounds b;
    switch (cfg.method) {
        case PtqMethod::fgo:
        case PtqMethod::feature: b = adc(x, s.bits, s.crit); break;
        case PtqMethod::minmax: b = minmax_calibrate(x); break;
        case PtqMethod::percentile: b = percentile_calibrate(x, cfg.percentile_p); break;
    }
    if (!s.ema_started) {
        s.set_bounds(b);
        s.ema_started = true;
    } else {
        Bounds cur = s.bounds();
        s.set_bounds(guard_bounds(ema_update(cur.l, b.l, cfg.ema_beta),
                                  ema_update(cur.u, b.u, cfg.ema_beta)));
    }
}

// Refinement moves l and u independently; keep each pair ordered afterwards.
inline void enforce_order(QuantContext& ctx) {
    for (QuantSite& s : ctx.sites()) {
        if (!s.calibrated || s.bits == 32 || s.per_channel()) continue;
        float l = s.l.value.data[0];
        float& u = s.u.value.data[0];
        if (!(u > l)) u = l + 1e-6f;
    }
}

// Mean over batches of the per-sample sum-abs reconstruction loss, with the
// boundaries held fixed.
inline double calibration_loss(CraftModel& model, QuantContext& ctx, const std::vector<Tensor>& lrs,
                               const std::vector<Tensor>& refs, int batch) {
    double total = 0.0;
    int batches = 0;
    size_t i = 0;
    while (i < lrs.size()) {
        size_t j = i + 1;
        while (j < lrs.size() && j - i < size_t(batch) && lrs[j].shape == lrs[i].shape) ++j;
        Tensor q = model.infer(stack3(lrs, i, j), &ctx);
        Tensor r = stack3(refs, i, j);
        double acc = 0.0;
        for (size_t k = 0; k < q.data.size(); ++k)
            acc += std::abs(double(q.data[k]) - double(r.data[k]));
        total += acc / double(j - i);
        ++batches;
        i = j;
    }
    return total / double(batches);
}

}  // namespace ptq_detail

// Two stages. First every quantization site is calibrated by running the
// calibration images through the model: weight bounds once on first sight,
// activation bounds per sample and folded with an EMA. Then, for the search
// based methods, the scalar boundaries are trained against the full-precision
// outputs with straight-through gradients while the weights stay frozen.
inline PtqResult ptq_calibrate(CraftModel& model, const std::vector<Tensor>& calib,
                               const PtqConfig& cfg) {
    cfg.validate();
    if (calib.empty()) throw std::invalid_argument("ptq: calibration set is empty");

    PtqResult res;
    QuantContext& ctx = res.ctx;
    ctx.default_bits = cfg.bits;
    ctx.force_feature = cfg.method != PtqMethod::fgo;
    ctx.mode = QuantMode::observe;
    ctx.observer = [&cfg](QuantSite& s, const Tensor& x) {
        if (s.bits == 32) return;
        if (s.kind == QuantKind::weight) {
            if (!s.calibrated) ptq_detail::calibrate_weight(s, x, cfg);
        } else {
            ptq_detail::calibrate_activation(s, x, cfg);
        }
    };

    for (const Tensor& img : calib) model.infer(ptq_detail::as_batch(img), &ctx);

    for (const QuantSite& s : ctx.sites())
        if (s.bits != 32 && !s.calibrated)
            throw std::logic_error("ptq: site '" + s.name + "' saw no data during calibration");

    ctx.observer = nullptr;
    ctx.mode = QuantMode::apply;

    bool search = cfg.method == PtqMethod::fgo || cfg.method == PtqMethod::feature;
    if (!search || cfg.epochs == 0 || cfg.bits == 32) return res;

    std::vector<Tensor> lrs;
    lrs.reserve(calib.size());
    for (const Tensor& img : calib)
        lrs.push_back(img.rank() == 4 ? img.reshaped({img.dim(1), img.dim(2), img.dim(3)}) : img);

    std::vector<Tensor> refs;
    refs.reserve(lrs.size());
    for (const Tensor& img : lrs) {
        Tensor out = model.infer(ptq_detail::as_batch(img), nullptr);
        refs.push_back(out.reshaped({out.dim(1), out.dim(2), out.dim(3)}));
    }

    std::vector<Parameter*> bounds = ctx.boundary_params();
    std::vector<float> snapshot;
    snapshot.reserve(bounds.size());
    for (Parameter* p : bounds) snapshot.push_back(p->value.data[0]);
    res.initial_loss = ptq_detail::calibration_loss(model, ctx, lrs, refs, cfg.batch);

    Adam opt;
    double lr = cfg.resolved_lr();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double total = 0.0;
        int batches = 0;
        size_t i = 0;
        while (i < lrs.size()) {
            size_t j = i + 1;
            while (j < lrs.size() && j - i < size_t(cfg.batch) && lrs[j].shape == lrs[i].shape) ++j;
            Tape t;
            Var out = model.forward(t, t.input(ptq_detail::stack3(lrs, i, j)), &ctx);
            Var tgt = t.input(ptq_detail::stack3(refs, i, j));
            Var loss = t.l1_loss(out, tgt, L1Reduction::per_sample_sum_batch_mean);
            t.backward(loss);
            opt.step(bounds, lr);
            ptq_detail::enforce_order(ctx);
            total += double(t.val(loss).data[0]);
            ++batches;
            i = j;
        }
        res.epoch_losses.push_back(total / double(batches));
    }

    // Never hand back boundaries worse than the ones calibration produced.
    res.final_loss = ptq_detail::calibration_loss(model, ctx, lrs, refs, cfg.batch);
    if (res.final_loss > res.initial_loss) {
        for (size_t k = 0; k < bounds.size(); ++k) bounds[k]->value.data[0] = snapshot[k];
        res.final_loss = res.initial_loss;
        res.reverted = true;
    }
    return res;
}

// Scalar boundaries only; per-channel weight bounds are an in-memory option
// and collapse to their whole-tensor fallback when serialized.
inline std::vector<QuantSiteRecord> site_records(const QuantContext& ctx) {
    std::vector<QuantSiteRecord> recs;
    for (const QuantSite& s : ctx.sites()) {
        if (!s.calibrated) continue;
        QuantSiteRecord r;
        r.name = s.name;
        r.kind = uint8_t(s.kind);
        r.crit = uint8_t(s.crit);
        Bounds b = s.bounds();
        r.l = b.l;
        r.u = b.u;
        r.bits = uint32_t(s.bits);
        recs.push_back(std::move(r));
    }
    return recs;
}

inline QuantContext context_from_records(const std::vector<QuantSiteRecord>& recs) {
    QuantContext ctx;
    for (const QuantSiteRecord& r : recs) {
        QuantSite* s = ctx.register_site(r.name, QuantKind(r.kind));
        s->crit = Criterion(r.crit);
        s->bits = int(r.bits);
        s->set_bounds(Bounds{r.l, r.u});
    }
    ctx.mode = QuantMode::apply;
    return ctx;
}

}  // namespace craft
