#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <utility>

#include "kernels.hpp"

namespace craft {

struct Parameter {
    Tensor value;
    Tensor grad;
    bool trainable = true;

    Parameter() = default;
    explicit Parameter(Tensor v, bool train = true) : value(std::move(v)), trainable(train) {
        grad = Tensor(value.shape, 0.f);
    }
    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.f); }
};

enum class L1Reduction { element_mean, per_sample_sum_batch_mean };

// Reverse-mode tape. Ops append one node each; backward replays closures in
// reverse creation order, which is a valid topological order by construction.
class Tape {
  public:
    struct Var {
        int id = -1;
        bool valid() const { return id >= 0; }
    };
    using BackFn = std::function<void(Tape&)>;

    bool recording = true;

    Var input(Tensor v) { return emit(std::move(v), false, {}); }

    Var param(Parameter& p) {
        Var v = emit(p.value, recording && p.trainable, {});
        nodes_[size_t(v.id)].bound = &p;
        return v;
    }

    const Tensor& val(Var v) const { return nodes_[size_t(v.id)].value; }
    const Tensor& val(int id) const { return nodes_[size_t(id)].value; }
    bool needs(Var v) const { return v.valid() && nodes_[size_t(v.id)].needs; }

    const Tensor* grad_ptr(int id) const {
        const Tensor& g = nodes_[size_t(id)].grad;
        return g.numel() > 0 ? &g : nullptr;
    }

    void accumulate(int id, const Tensor& g) {
        auto& node = nodes_[size_t(id)];
        if (!node.needs) return;
        if (node.grad.numel() == 0) {
            node.grad = g;
            return;
        }
        for (size_t i = 0; i < g.data.size(); ++i) node.grad.data[i] += g.data[i];
    }

    Var emit(Tensor value, bool needs, BackFn back) {
        Node n;
        n.value = std::move(value);
        n.needs = recording && needs;
        if (n.needs) n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Var{int(nodes_.size()) - 1};
    }

    size_t size() const { return nodes_.size(); }

    void backward(Var loss) {
        if (!loss.valid() || val(loss).numel() != 1)
            throw std::invalid_argument("backward: loss must be a scalar node");
        for (auto& n : nodes_) n.grad = Tensor{};
        nodes_[size_t(loss.id)].grad = Tensor({1}, 1.f);
        if (!nodes_[size_t(loss.id)].needs)
            return;
        for (int i = loss.id; i >= 0; --i) {
            auto& n = nodes_[size_t(i)];
            if (n.back && n.grad.numel() > 0) n.back(*this);
        }
        // each backward call produces fresh parameter gradients; a parameter
        // bound to several vars still sums across those bindings
        for (auto& n : nodes_)
            if (n.bound && n.bound->trainable) n.bound->zero_grad();
        for (auto& n : nodes_)
            if (n.bound && n.bound->trainable && n.grad.numel() > 0)
                for (size_t i = 0; i < n.grad.data.size(); ++i) n.bound->grad.data[i] += n.grad.data[i];
    }

    // ------------------------------------------------------------ ops

    Var conv2d(Var x, Var w, Var b, ops::ConvSpec cs = {}) {
        bool has_b = b.valid();
        Tensor y = ops::conv2d(val(x), val(w), has_b ? val(b) : Tensor{}, cs);
        bool need = needs(x) || needs(w) || (has_b && needs(b));
        if (!recording || !need) return emit(std::move(y), false, {});
        int xi = x.id, wi = w.id, bi = has_b ? b.id : -1;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            const Tensor* g = t.grad_ptr(self.id);
            auto gr = ops::conv2d_backward(t.val(xi), t.val(wi), bi >= 0, *g, cs);
            t.accumulate(xi, gr.dx);
            t.accumulate(wi, gr.dw);
            if (bi >= 0) t.accumulate(bi, gr.db);
        });
        return self;
    }

    Var max_pool2d(Var x, int64_t k, int64_t stride, int64_t pad) {
        auto r = ops::max_pool2d(val(x), k, stride, pad);
        if (!recording || !needs(x)) return emit(std::move(r.out), false, {});
        int xi = x.id;
        auto argmax = std::make_shared<std::vector<int64_t>>(std::move(r.argmax));
        Var self = emit(std::move(r.out), true, {});
        set_back(self, [=](Tape& t) {
            ops::PoolResult fw;
            fw.out = t.val(self.id);
            fw.argmax = *argmax;
            t.accumulate(xi, ops::max_pool2d_backward(t.val(xi), fw, *t.grad_ptr(self.id)));
        });
        return self;
    }

    Var softmax(Var x, int axis) {
        Tensor y = ops::softmax(val(x), axis);
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            t.accumulate(xi, ops::softmax_backward(t.val(self.id), *t.grad_ptr(self.id), axis));
        });
        return self;
    }

    Var layer_norm(Var x, Var gamma, Var beta) {
        auto r = ops::layer_norm(val(x), val(gamma), val(beta));
        bool need = needs(x) || needs(gamma) || needs(beta);
        if (!recording || !need) return emit(std::move(r.out), false, {});
        int xi = x.id, gi = gamma.id, bi = beta.id;
        auto stats = std::make_shared<std::pair<Tensor, Tensor>>(std::move(r.mean), std::move(r.rstd));
        Var self = emit(std::move(r.out), true, {});
        set_back(self, [=](Tape& t) {
            ops::LayerNormResult fw;
            fw.mean = stats->first;
            fw.rstd = stats->second;
            auto gr = ops::layer_norm_backward(t.val(xi), t.val(gi), fw, *t.grad_ptr(self.id));
            t.accumulate(xi, gr.dx);
            t.accumulate(gi, gr.dgamma);
            t.accumulate(bi, gr.dbeta);
        });
        return self;
    }

    Var gelu(Var x) {
        Tensor y = ops::gelu(val(x));
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) { t.accumulate(xi, ops::gelu_backward(t.val(xi), *t.grad_ptr(self.id))); });
        return self;
    }

    Var pixel_shuffle(Var x, int64_t r) {
        Tensor y = ops::pixel_shuffle(val(x), r);
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) { t.accumulate(xi, ops::pixel_unshuffle(*t.grad_ptr(self.id), r)); });
        return self;
    }

    Var bmm(Var a, Var b, bool trans_b) {
        Tensor y = ops::bmm(val(a), val(b), trans_b);
        bool need = needs(a) || needs(b);
        if (!recording || !need) return emit(std::move(y), false, {});
        int ai = a.id, bi = b.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            auto gr = ops::bmm_backward(t.val(ai), t.val(bi), trans_b, *t.grad_ptr(self.id));
            t.accumulate(ai, gr.da);
            t.accumulate(bi, gr.db);
        });
        return self;
    }

    Var linear(Var x, Var w, Var b) {
        bool has_b = b.valid();
        Tensor y = ops::linear(val(x), val(w), has_b ? val(b) : Tensor{});
        bool need = needs(x) || needs(w) || (has_b && needs(b));
        if (!recording || !need) return emit(std::move(y), false, {});
        int xi = x.id, wi = w.id, bi = has_b ? b.id : -1;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            auto gr = ops::linear_backward(t.val(xi), t.val(wi), bi >= 0, *t.grad_ptr(self.id));
            t.accumulate(xi, gr.dx);
            t.accumulate(wi, gr.dw);
            if (bi >= 0) t.accumulate(bi, gr.db);
        });
        return self;
    }

    Var pad_reflect(Var x, int64_t top, int64_t bottom, int64_t left, int64_t right) {
        Tensor y = ops::pad_reflect(val(x), top, bottom, left, right);
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            t.accumulate(xi, ops::pad_reflect_backward(t.val(xi), top, bottom, left, right, *t.grad_ptr(self.id)));
        });
        return self;
    }

    Var crop(Var x, int64_t top, int64_t left, int64_t h, int64_t w) {
        Tensor y = ops::crop(val(x), top, left, h, w);
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self,
                 [=](Tape& t) { t.accumulate(xi, ops::crop_backward(t.val(xi), top, left, *t.grad_ptr(self.id))); });
        return self;
    }

    Var roll(Var x, int64_t dy, int64_t dx) {
        Tensor y = ops::roll(val(x), dy, dx);
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) { t.accumulate(xi, ops::roll(*t.grad_ptr(self.id), -dy, -dx)); });
        return self;
    }

    Var window_partition(Var x, int64_t wh, int64_t ww) {
        const Tensor& xv = val(x);
        int64_t N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
        Tensor y = ops::window_partition(xv, wh, ww);
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            t.accumulate(xi, ops::window_merge(*t.grad_ptr(self.id), wh, ww, N, C, H, W));
        });
        return self;
    }

    Var window_merge(Var win, int64_t wh, int64_t ww, int64_t N, int64_t C, int64_t H, int64_t W) {
        Tensor y = ops::window_merge(val(win), wh, ww, N, C, H, W);
        if (!recording || !needs(win)) return emit(std::move(y), false, {});
        int xi = win.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) { t.accumulate(xi, ops::window_partition(*t.grad_ptr(self.id), wh, ww)); });
        return self;
    }

    Var permute(Var x, std::vector<int> perm) {
        Tensor y = ops::permute(val(x), perm);
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            t.accumulate(xi, ops::permute(*t.grad_ptr(self.id), ops::inverse_perm(perm)));
        });
        return self;
    }

    Var reshape(Var x, std::vector<int64_t> shape) {
        Tensor y = val(x).reshaped(shape);
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        std::vector<int64_t> xshape = val(x).shape;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) { t.accumulate(xi, t.grad_ptr(self.id)->reshaped(xshape)); });
        return self;
    }

    Var add(Var a, Var b) {
        Tensor y = ops::add(val(a), val(b));
        bool need = needs(a) || needs(b);
        if (!recording || !need) return emit(std::move(y), false, {});
        int ai = a.id, bi = b.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            t.accumulate(ai, *t.grad_ptr(self.id));
            t.accumulate(bi, *t.grad_ptr(self.id));
        });
        return self;
    }

    Var sub(Var a, Var b) {
        Tensor y = ops::sub(val(a), val(b));
        bool need = needs(a) || needs(b);
        if (!recording || !need) return emit(std::move(y), false, {});
        int ai = a.id, bi = b.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            t.accumulate(ai, *t.grad_ptr(self.id));
            t.accumulate(bi, ops::scale(*t.grad_ptr(self.id), -1.0));
        });
        return self;
    }

    Var mul(Var a, Var b) {
        Tensor y = ops::mul(val(a), val(b));
        bool need = needs(a) || needs(b);
        if (!recording || !need) return emit(std::move(y), false, {});
        int ai = a.id, bi = b.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            t.accumulate(ai, ops::mul(*t.grad_ptr(self.id), t.val(bi)));
            t.accumulate(bi, ops::mul(*t.grad_ptr(self.id), t.val(ai)));
        });
        return self;
    }

    Var scale(Var x, double s) {
        Tensor y = ops::scale(val(x), s);
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) { t.accumulate(xi, ops::scale(*t.grad_ptr(self.id), s)); });
        return self;
    }

    Var concat_channels(Var a, Var b) {
        Tensor y = ops::concat_channels(val(a), val(b));
        bool need = needs(a) || needs(b);
        if (!recording || !need) return emit(std::move(y), false, {});
        int ai = a.id, bi = b.id;
        int64_t ca = val(a).dim(1), cb = val(b).dim(1);
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            const Tensor& g = *t.grad_ptr(self.id);
            t.accumulate(ai, ops::slice_channels(g, 0, ca));
            t.accumulate(bi, ops::slice_channels(g, ca, ca + cb));
        });
        return self;
    }

    Var slice_channels(Var x, int64_t c0, int64_t c1) {
        Tensor y = ops::slice_channels(val(x), c0, c1);
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            const Tensor& g = *t.grad_ptr(self.id);
            Tensor dx(t.val(xi).shape, 0.f);
            int64_t N = dx.dim(0), C = dx.dim(1), HW = dx.dim(2) * dx.dim(3);
            for (int64_t n = 0; n < N; ++n)
                std::memcpy(dx.ptr() + (n * C + c0) * HW, g.ptr() + n * (c1 - c0) * HW,
                            size_t((c1 - c0) * HW) * sizeof(float));
            t.accumulate(xi, dx);
        });
        return self;
    }

    // y = exp(s) for a single-element tensor.
    Var exp_scalar(Var s) {
        const Tensor& sv = val(s);
        if (sv.numel() != 1) throw std::invalid_argument("exp_scalar: input must have one element");
        Tensor y({1});
        y.data[0] = std::exp(sv.data[0]);
        if (!recording || !needs(s)) return emit(std::move(y), false, {});
        int si = s.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            Tensor ds({1});
            ds.data[0] = t.grad_ptr(self.id)->data[0] * t.val(self.id).data[0];
            t.accumulate(si, ds);
        });
        return self;
    }

    // y = x / s with scalar s.
    Var div_by_scalar(Var x, Var s) {
        const Tensor& sv = val(s);
        if (sv.numel() != 1) throw std::invalid_argument("div_by_scalar: divisor must have one element");
        Tensor y = ops::scale(val(x), 1.0 / double(sv.data[0]));
        bool need = needs(x) || needs(s);
        if (!recording || !need) return emit(std::move(y), false, {});
        int xi = x.id, si = s.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            const Tensor& g = *t.grad_ptr(self.id);
            double sval = t.val(si).data[0];
            t.accumulate(xi, ops::scale(g, 1.0 / sval));
            double acc = 0;
            const Tensor& yv = t.val(self.id);
            for (size_t i = 0; i < g.data.size(); ++i) acc += double(g.data[i]) * double(yv.data[i]);
            Tensor ds({1});
            ds.data[0] = float(-acc / sval);
            t.accumulate(si, ds);
        });
        return self;
    }

    // x (B,n,m) + bias (hg,n,m), batch b uses bias[b % hg].
    Var add_bias_heads(Var x, Var bias) {
        const Tensor& xv = val(x);
        const Tensor& bv = val(bias);
        check_rank(xv, 3, "add_bias_heads input");
        check_rank(bv, 3, "add_bias_heads bias");
        int64_t B = xv.dim(0), n = xv.dim(1), m = xv.dim(2), hg = bv.dim(0);
        if (bv.dim(1) != n || bv.dim(2) != m || B % hg != 0)
            throw std::invalid_argument("add_bias_heads: " + xv.shape_str() + " vs " + bv.shape_str());
        Tensor y(xv.shape);
        for (int64_t b = 0; b < B; ++b) {
            const float* bp = bv.ptr() + (b % hg) * n * m;
            const float* xp = xv.ptr() + b * n * m;
            float* yp = y.ptr() + b * n * m;
            for (int64_t i = 0; i < n * m; ++i) yp[i] = xp[i] + bp[i];
        }
        bool need = needs(x) || needs(bias);
        if (!recording || !need) return emit(std::move(y), false, {});
        int xi = x.id, bi = bias.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            const Tensor& g = *t.grad_ptr(self.id);
            t.accumulate(xi, g);
            Tensor db(t.val(bi).shape, 0.f);
            for (int64_t b = 0; b < B; ++b) {
                float* dp = db.ptr() + (b % hg) * n * m;
                const float* gp = g.ptr() + b * n * m;
                for (int64_t i = 0; i < n * m; ++i) dp[i] += gp[i];
            }
            t.accumulate(bi, db);
        });
        return self;
    }

    Var l1_loss(Var a, Var b, L1Reduction red = L1Reduction::element_mean) {
        const Tensor& av = val(a);
        const Tensor& bv = val(b);
        check_same_shape(av, bv, "l1_loss");
        double w = red == L1Reduction::element_mean ? 1.0 / double(av.numel()) : 1.0 / double(av.dim(0));
        double acc = 0;
        for (size_t i = 0; i < av.data.size(); ++i) acc += std::abs(double(av.data[i]) - double(bv.data[i]));
        Tensor y({1});
        y.data[0] = float(acc * w);
        bool need = needs(a) || needs(b);
        if (!recording || !need) return emit(std::move(y), false, {});
        int ai = a.id, bi = b.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            double g = double(t.grad_ptr(self.id)->data[0]) * w;
            const Tensor& a2 = t.val(ai);
            const Tensor& b2 = t.val(bi);
            Tensor da(a2.shape);
            for (size_t i = 0; i < a2.data.size(); ++i) {
                double d = double(a2.data[i]) - double(b2.data[i]);
                da.data[i] = float(d > 0 ? g : (d < 0 ? -g : 0.0));
            }
            t.accumulate(ai, da);
            t.accumulate(bi, ops::scale(da, -1.0));
        });
        return self;
    }

    Var mean_all(Var x) {
        const Tensor& xv = val(x);
        double acc = 0;
        for (float v : xv.data) acc += v;
        Tensor y({1});
        y.data[0] = float(acc / double(xv.numel()));
        if (!recording || !needs(x)) return emit(std::move(y), false, {});
        int xi = x.id;
        Var self = emit(std::move(y), true, {});
        set_back(self, [=](Tape& t) {
            const Tensor& xv2 = t.val(xi);
            t.accumulate(xi, Tensor(xv2.shape, float(double(t.grad_ptr(self.id)->data[0]) / double(xv2.numel()))));
        });
        return self;
    }

    void set_back(Var v, BackFn fn) { nodes_[size_t(v.id)].back = std::move(fn); }

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs = false;
        Parameter* bound = nullptr;
        BackFn back;
    };
    std::vector<Node> nodes_;
};

using Var = Tape::Var;

// ------------------------------------------------------------------ optimizers

class Sgd {
  public:
    void step(const std::vector<Parameter*>& params, double lr) {
        for (Parameter* p : params) {
            if (!p->trainable) continue;
            for (size_t i = 0; i < p->value.data.size(); ++i)
                p->value.data[i] = float(double(p->value.data[i]) - lr * double(p->grad.data[i]));
        }
    }
};

class Adam {
  public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<Parameter*>& params, double lr) {
        ++t_;
        double c1 = 1.0 - std::pow(beta1_, double(t_));
        double c2 = 1.0 - std::pow(beta2_, double(t_));
        for (Parameter* p : params) {
            if (!p->trainable) continue;
            auto& st = state_[p];
            if (st.m.numel() == 0) {
                st.m = Tensor(p->value.shape, 0.f);
                st.v = Tensor(p->value.shape, 0.f);
            }
            for (size_t i = 0; i < p->value.data.size(); ++i) {
                double g = p->grad.data[i];
                double m = beta1_ * double(st.m.data[i]) + (1.0 - beta1_) * g;
                double v = beta2_ * double(st.v.data[i]) + (1.0 - beta2_) * g * g;
                st.m.data[i] = float(m);
                st.v.data[i] = float(v);
                p->value.data[i] =
                    float(double(p->value.data[i]) - lr * (m / c1) / (std::sqrt(v / c2) + eps_));
            }
        }
    }

  private:
    struct State {
        Tensor m, v;
    };
    double beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::unordered_map<Parameter*, State> state_;
};

inline void zero_grads(const std::vector<Parameter*>& params) {
    for (Parameter* p : params) p->zero_grad();
}

}  // namespace craft
