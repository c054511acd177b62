#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "autograd.hpp"
#include "io.hpp"
#include "quant.hpp"
#include "rng.hpp"

namespace craft {

struct CraftConfig {
    int64_t channels = 48;
    int64_t heads = 6;     // split evenly across the two window orientations
    int64_t n_groups = 4;  // residual groups in the body
    int64_t n_crfb = 2;    // fusion blocks per group
    int64_t scale = 4;
    double mlp_ratio = 2.0;
    double imlp_ratio = 2.66;
    int64_t window_h = 4;
    int64_t window_w = 16;
    uint64_t seed = 0;

    int64_t mlp_hidden() const { return int64_t(std::llround(mlp_ratio * double(channels))); }
    int64_t imlp_hidden() const { return int64_t(std::ceil(imlp_ratio * double(channels))); }
    int64_t pad_multiple() const { return std::lcm(window_h, window_w); }

    void validate() const {
        if (channels < 2 || channels % 2 != 0)
            throw std::invalid_argument("config: channels must be even and >= 2");
        if (heads < 2 || heads % 2 != 0) throw std::invalid_argument("config: heads must be even and >= 2");
        if (channels % heads != 0) throw std::invalid_argument("config: channels must divide evenly into heads");
        if ((channels / 2) % (heads / 2) != 0)
            throw std::invalid_argument("config: per-orientation channels must divide into per-orientation heads");
        if (n_groups < 0) throw std::invalid_argument("config: n_groups must be >= 0");
        if (n_crfb < 1) throw std::invalid_argument("config: n_crfb must be >= 1");
        if (scale < 2 || scale > 4) throw std::invalid_argument("config: scale must be 2, 3 or 4");
        if (window_h < 1 || window_w < 1) throw std::invalid_argument("config: window extents must be positive");
        if (mlp_ratio <= 0 || imlp_ratio <= 0) throw std::invalid_argument("config: ratios must be positive");
    }
};

struct Complexity {
    int64_t params = 0;
    double flops = 0;  // convolutions count 2 per mac, attention products 1 per mac
};

namespace model_detail {

// rows of the MLP-produced bias table indexed by relative token offset
inline Var gather_bias(Tape& t, Var table, std::vector<int64_t> idx, int64_t heads, int64_t tokens) {
    const Tensor& tv = t.val(table);
    Tensor y({heads, tokens, tokens});
    for (int64_t h = 0; h < heads; ++h)
        for (int64_t p = 0; p < tokens * tokens; ++p)
            y.data[size_t(h * tokens * tokens + p)] = tv.data[size_t(idx[size_t(p)] * heads + h)];
    if (!t.recording || !t.needs(table)) return t.emit(std::move(y), false, {});
    int ti = table.id;
    int64_t rows = tv.dim(0);
    Var self = t.emit(std::move(y), true, {});
    t.set_back(self, [=, ix = std::move(idx)](Tape& tt) {
        const Tensor* g = tt.grad_ptr(self.id);
        Tensor dt({rows, heads}, 0.f);
        for (int64_t h = 0; h < heads; ++h)
            for (int64_t p = 0; p < tokens * tokens; ++p)
                dt.data[size_t(ix[size_t(p)] * heads + h)] += g->data[size_t(h * tokens * tokens + p)];
        tt.accumulate(ti, dt);
    });
    return self;
}

}  // namespace model_detail

class CraftModel {
  public:
    explicit CraftModel(CraftConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        build();
        init_weights();
    }

    const CraftConfig& config() const { return cfg_; }

    Parameter& param(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw std::logic_error("model: unknown parameter " + name);
        return it->second;
    }

    const std::map<std::string, Parameter>& params() const { return params_; }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out;
        out.reserve(params_.size());
        for (auto& [k, p] : params_) out.push_back(&p);
        return out;
    }

    int64_t param_count() const {
        int64_t n = 0;
        for (const auto& [k, p] : params_) n += p.value.numel();
        return n;
    }

    // x: (N,3,H,W) in [0,1]; result (N,3,scale*H,scale*W)
    Var forward(Tape& t, Var x, QuantContext* qc = nullptr) {
        const Tensor& xv = t.val(x);
        check_rank(xv, 4, "model input");
        if (xv.dim(1) != 3) throw std::invalid_argument("model: expected 3 input channels, got " + xv.shape_str());
        int64_t H = xv.dim(2), W = xv.dim(3);

        x = act(t, qc, "model.in", x);
        Var p = pad_to_multiple(t, x, cfg_.pad_multiple());
        Var f0 = conv_block(t, qc, "shallow", p, {1, 1, 1});
        Var f = f0;
        for (int64_t g = 0; g < cfg_.n_groups; ++g) {
            std::string gp = "groups." + std::to_string(g);
            Var res = f;
            for (int64_t b = 0; b < cfg_.n_crfb; ++b) f = crfb(t, f, gp + ".crfbs." + std::to_string(b), qc);
            f = conv_block(t, qc, gp + ".conv", f, {1, 1, 1});
            f = t.add(f, res);
        }
        if (cfg_.n_groups > 0) f = conv_block(t, qc, "agg", f, {1, 1, 1});
        f = t.add(f, f0);
        Var up = conv_block(t, qc, "recon", f, {1, 1, 1});
        up = t.pixel_shuffle(up, cfg_.scale);
        up = t.crop(up, 0, 0, H * cfg_.scale, W * cfg_.scale);
        return act(t, qc, "model.out", up);
    }

    Tensor infer(const Tensor& x, QuantContext* qc = nullptr) {
        Tape t;
        t.recording = false;
        return t.val(forward(t, t.input(x), qc));
    }

    // ------------------------------------------------------------- persist

    std::map<std::string, std::string> config_map() const {
        std::map<std::string, std::string> m;
        auto num = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        m["channels"] = std::to_string(cfg_.channels);
        m["heads"] = std::to_string(cfg_.heads);
        m["n_groups"] = std::to_string(cfg_.n_groups);
        m["n_crfb"] = std::to_string(cfg_.n_crfb);
        m["scale"] = std::to_string(cfg_.scale);
        m["mlp_ratio"] = num(cfg_.mlp_ratio);
        m["imlp_ratio"] = num(cfg_.imlp_ratio);
        m["window_h"] = std::to_string(cfg_.window_h);
        m["window_w"] = std::to_string(cfg_.window_w);
        m["seed"] = std::to_string(cfg_.seed);
        return m;
    }

    static CraftConfig config_from_map(const std::map<std::string, std::string>& m) {
        CraftConfig cfg;
        for (const auto& [k, v] : m) {
            if (k == "channels") cfg.channels = std::stoll(v);
            else if (k == "heads") cfg.heads = std::stoll(v);
            else if (k == "n_groups") cfg.n_groups = std::stoll(v);
            else if (k == "n_crfb") cfg.n_crfb = std::stoll(v);
            else if (k == "scale") cfg.scale = std::stoll(v);
            else if (k == "mlp_ratio") cfg.mlp_ratio = std::stod(v);
            else if (k == "imlp_ratio") cfg.imlp_ratio = std::stod(v);
            else if (k == "window_h") cfg.window_h = std::stoll(v);
            else if (k == "window_w") cfg.window_w = std::stoll(v);
            else if (k == "seed") cfg.seed = std::stoull(v);
            else throw std::runtime_error("checkpoint: unknown config key '" + k + "'");
        }
        return cfg;
    }

    void save(const std::string& path, const std::vector<QuantSiteRecord>& sites = {}) const {
        Checkpoint ck;
        ck.config = config_map();
        for (const auto& [k, p] : params_) ck.tensors[k] = p.value;
        ck.sites = sites;
        save_checkpoint(path, ck);
    }

    static CraftModel load(const std::string& path, std::vector<QuantSiteRecord>* sites = nullptr) {
        Checkpoint ck = load_checkpoint(path);
        CraftModel m(config_from_map(ck.config));
        for (auto& [name, p] : m.params_) {
            auto it = ck.tensors.find(name);
            if (it == ck.tensors.end()) throw std::runtime_error("checkpoint: missing tensor " + name);
            if (it->second.shape != p.value.shape)
                throw std::runtime_error("checkpoint: shape mismatch for " + name + ": file " +
                                         it->second.shape_str() + " vs model " + p.value.shape_str());
            p.value = it->second;
        }
        if (ck.tensors.size() != m.params_.size())
            for (const auto& [name, t] : ck.tensors)
                if (m.params_.find(name) == m.params_.end())
                    throw std::runtime_error("checkpoint: unexpected tensor " + name);
        if (sites) *sites = ck.sites;
        return m;
    }

    // ---------------------------------------------------------- complexity

    Complexity complexity(int64_t in_h, int64_t in_w) const {
        int64_t L = cfg_.pad_multiple();
        double hw = double(((in_h + L - 1) / L) * L) * double(((in_w + L - 1) / L) * L);
        int64_t C = cfg_.channels, M = cfg_.heads, hid = cfg_.imlp_hidden(), mh = cfg_.mlp_hidden();
        int64_t T = cfg_.window_h * cfg_.window_w;
        int64_t O = (2 * cfg_.window_h - 1) * (2 * cfg_.window_w - 1);

        double hferb = 2.0 * hw * double((C / 2) * (C / 2) * 9 + (C / 2) * (C / 2) + C * C);
        double bias_mlp = 2.0 * 2.0 * double(O * 2 * (4 * M) + O * (4 * M) * (M / 2));
        double srwab = 2.0 * hw * double(3 * C * C)   // q, k, v projections
                       + 2.0 * hw * double(9 * C)     // depthwise positional conv
                       + 1.0 * hw * double(2 * T * C)  // windowed attention products
                       + bias_mlp
                       + 2.0 * hw * double(C * C)                // merge projection
                       + 2.0 * hw * double(C * mh + mh * C);     // mlp
        double hfb = 2.0 * hw * double(3 * C * C) + 2.0 * hw * double(3 * 9 * C)
                     + 1.0 * hw * double(2 * C * C)                      // channel attention products
                     + 2.0 * hw * double(2 * C * hid + 2 * 9 * hid + hid * C);  // gated mlp
        double crfb = hferb + 2.0 * srwab + hfb;

        double flops = 2.0 * hw * double(C * 3 * 9);  // shallow
        flops += double(cfg_.n_groups) * (double(cfg_.n_crfb) * crfb + 2.0 * hw * double(9 * C * C));
        if (cfg_.n_groups > 0) flops += 2.0 * hw * double(9 * C * C);  // aggregation
        flops += 2.0 * hw * double(9 * C * 3 * cfg_.scale * cfg_.scale);  // reconstruction
        return {param_count(), flops};
    }

  private:
    CraftConfig cfg_;
    std::map<std::string, Parameter> params_;

    // ------------------------------------------------------------ building

    void add_conv(const std::string& p, int64_t out, int64_t in, int64_t k, int64_t groups = 1) {
        params_.emplace(p + ".weight", Parameter(Tensor({out, in / groups, k, k})));
        params_.emplace(p + ".bias", Parameter(Tensor({out})));
    }

    void add_linear(const std::string& p, int64_t out, int64_t in) {
        params_.emplace(p + ".weight", Parameter(Tensor({out, in})));
        params_.emplace(p + ".bias", Parameter(Tensor({out})));
    }

    void add_ln(const std::string& p) {
        params_.emplace(p + ".gamma", Parameter(Tensor({cfg_.channels})));
        params_.emplace(p + ".beta", Parameter(Tensor({cfg_.channels})));
    }

    void build_srwab(const std::string& p) {
        int64_t C = cfg_.channels, M = cfg_.heads;
        add_ln(p + ".ln1");
        add_conv(p + ".q", C, C, 1);
        add_conv(p + ".k", C, C, 1);
        add_conv(p + ".v", C, C, 1);
        add_conv(p + ".lepe", C, C, 3, C);
        for (const char* o : {".bias_h", ".bias_v"}) {
            add_linear(p + o + ".fc1", 4 * M, 2);
            add_linear(p + o + ".fc2", M / 2, 4 * M);
        }
        add_conv(p + ".proj", C, C, 1);
        add_ln(p + ".ln2");
        add_conv(p + ".mlp.fc1", cfg_.mlp_hidden(), C, 1);
        add_conv(p + ".mlp.fc2", C, cfg_.mlp_hidden(), 1);
    }

    void build_crfb(const std::string& p) {
        int64_t C = cfg_.channels, hid = cfg_.imlp_hidden();
        add_conv(p + ".hferb.lfe", C / 2, C / 2, 3);
        add_conv(p + ".hferb.hfe", C / 2, C / 2, 1);
        add_conv(p + ".hferb.fuse", C, C, 1);
        build_srwab(p + ".srwab1");
        build_srwab(p + ".srwab2");
        add_conv(p + ".hfb.q", C, C, 1);
        add_conv(p + ".hfb.q_dw", C, C, 3, C);
        add_ln(p + ".hfb.ln1");
        add_conv(p + ".hfb.k", C, C, 1);
        add_conv(p + ".hfb.k_dw", C, C, 3, C);
        add_conv(p + ".hfb.v", C, C, 1);
        add_conv(p + ".hfb.v_dw", C, C, 3, C);
        params_.emplace(p + ".hfb.alpha_log", Parameter(Tensor({1})));
        add_ln(p + ".hfb.ln2");
        add_conv(p + ".hfb.imlp.b1", hid, C, 1);
        add_conv(p + ".hfb.imlp.b1_dw", hid, hid, 3, hid);
        add_conv(p + ".hfb.imlp.b2", hid, C, 1);
        add_conv(p + ".hfb.imlp.b2_dw", hid, hid, 3, hid);
        add_conv(p + ".hfb.imlp.proj", C, hid, 1);
    }

    void build() {
        int64_t C = cfg_.channels;
        add_conv("shallow", C, 3, 3);
        for (int64_t g = 0; g < cfg_.n_groups; ++g) {
            std::string gp = "groups." + std::to_string(g);
            for (int64_t b = 0; b < cfg_.n_crfb; ++b) build_crfb(gp + ".crfbs." + std::to_string(b));
            add_conv(gp + ".conv", C, C, 3);
        }
        if (cfg_.n_groups > 0) add_conv("agg", C, C, 3);
        add_conv("recon", 3 * cfg_.scale * cfg_.scale, C, 3);
    }

    void init_weights() {
        for (auto& [name, p] : params_) {
            RngStream rng(cfg_.seed, "init." + name);
            bool is_gamma = name.size() >= 6 && name.compare(name.size() - 6, 6, ".gamma") == 0;
            bool is_bias = name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
            bool is_beta = name.size() >= 5 && name.compare(name.size() - 5, 5, ".beta") == 0;
            bool is_alpha = name.size() >= 10 && name.compare(name.size() - 10, 10, ".alpha_log") == 0;
            if (is_gamma) {
                std::fill(p.value.data.begin(), p.value.data.end(), 1.f);
            } else if (is_bias || is_beta || is_alpha) {
                std::fill(p.value.data.begin(), p.value.data.end(), 0.f);
            } else {
                for (auto& v : p.value.data) v = float(rng.trunc_normal(0.02));
            }
        }
    }

    // ------------------------------------------------------------- forward

    Var act(Tape& t, QuantContext* qc, const std::string& site, Var v) {
        return qc ? qc->process(t, site, QuantKind::activation, v) : v;
    }

    Var conv_block(Tape& t, QuantContext* qc, const std::string& p, Var x, ops::ConvSpec cs) {
        Var xin = act(t, qc, p + ".in", x);
        Var w = t.param(param(p + ".weight"));
        if (qc) w = qc->process(t, p + ".weight", QuantKind::weight, w);
        return t.conv2d(xin, w, t.param(param(p + ".bias")), cs);
    }

    Var linear_block(Tape& t, QuantContext* qc, const std::string& p, Var x) {
        Var xin = act(t, qc, p + ".in", x);
        Var w = t.param(param(p + ".weight"));
        if (qc) w = qc->process(t, p + ".weight", QuantKind::weight, w);
        return t.linear(xin, w, t.param(param(p + ".bias")));
    }

    Var layer_norm_block(Tape& t, const std::string& p, Var x) {
        return t.layer_norm(x, t.param(param(p + ".gamma")), t.param(param(p + ".beta")));
    }

    Var pad_to_multiple(Tape& t, Var x, int64_t mult) {
        for (;;) {
            int64_t H = t.val(x).dim(2), W = t.val(x).dim(3);
            int64_t ph = (mult - H % mult) % mult, pw = (mult - W % mult) % mult;
            if (ph == 0 && pw == 0) return x;
            if (H == 1 && ph > 0) throw std::invalid_argument("model: input too small to pad");
            if (W == 1 && pw > 0) throw std::invalid_argument("model: input too small to pad");
            // reflection can only mirror extent-1 pixels per pass
            x = t.pad_reflect(x, 0, std::min(ph, H - 1), 0, std::min(pw, W - 1));
        }
    }

    Var hferb(Tape& t, Var x, const std::string& p, QuantContext* qc) {
        int64_t C = cfg_.channels;
        Var x1 = t.slice_channels(x, 0, C / 2);
        Var x2 = t.slice_channels(x, C / 2, C);
        Var lfe = t.gelu(conv_block(t, qc, p + ".lfe", x1, {1, 1, 1}));
        Var hfe = t.gelu(conv_block(t, qc, p + ".hfe", t.max_pool2d(x2, 3, 1, 1), {1, 0, 1}));
        Var fused = conv_block(t, qc, p + ".fuse", t.concat_channels(lfe, hfe), {1, 0, 1});
        return t.add(fused, x);
    }

    Var position_bias(Tape& t, QuantContext* qc, const std::string& p, int64_t wh, int64_t ww, int64_t ho) {
        int64_t ow = 2 * ww - 1;
        int64_t rows = (2 * wh - 1) * ow;
        Tensor rel({rows, 2});
        for (int64_t dy = -(wh - 1); dy <= wh - 1; ++dy)
            for (int64_t dx = -(ww - 1); dx <= ww - 1; ++dx) {
                int64_t r = (dy + wh - 1) * ow + (dx + ww - 1);
                rel.data[size_t(r * 2)] = wh > 1 ? float(dy) / float(wh - 1) : 0.f;
                rel.data[size_t(r * 2 + 1)] = ww > 1 ? float(dx) / float(ww - 1) : 0.f;
            }
        Var h1 = t.gelu(linear_block(t, qc, p + ".fc1", t.input(rel)));
        Var tbl = linear_block(t, qc, p + ".fc2", h1);
        int64_t T = wh * ww;
        std::vector<int64_t> idx(size_t(T * T), 0);
        for (int64_t i = 0; i < T; ++i)
            for (int64_t j = 0; j < T; ++j) {
                int64_t dy = i / ww - j / ww + wh - 1;
                int64_t dx = i % ww - j % ww + ww - 1;
                idx[size_t(i * T + j)] = dy * ow + dx;
            }
        return model_detail::gather_bias(t, tbl, std::move(idx), ho, T);
    }

    Var orientation_attention(Tape& t, QuantContext* qc, const std::string& p, const std::string& bias_name,
                              Var q, Var k, Var v, int64_t c0, int64_t c1, int64_t wh, int64_t ww, bool shifted) {
        const Tensor& qv = t.val(q);
        int64_t N = qv.dim(0), H = qv.dim(2), W = qv.dim(3);
        int64_t Co = c1 - c0, ho = cfg_.heads / 2, d = Co / ho, T = wh * ww;
        Var qo = t.slice_channels(q, c0, c1);
        Var ko = t.slice_channels(k, c0, c1);
        Var vo = t.slice_channels(v, c0, c1);
        int64_t sh = wh / 2, sw = ww / 2;
        if (shifted) {
            qo = t.roll(qo, -sh, -sw);
            ko = t.roll(ko, -sh, -sw);
            vo = t.roll(vo, -sh, -sw);
        }
        auto heads_of = [&](Var z) {
            Var wp = t.window_partition(z, wh, ww);  // (B,T,Co)
            int64_t B = t.val(wp).dim(0);
            wp = t.reshape(wp, {B, T, ho, d});
            wp = t.permute(wp, {0, 2, 1, 3});
            return t.reshape(wp, {B * ho, T, d});
        };
        Var qh = t.scale(heads_of(qo), float(1.0 / std::sqrt(double(d))));
        Var kh = heads_of(ko);
        Var vh = heads_of(vo);
        Var attn = t.bmm(qh, kh, true);  // (B*ho, T, T)
        attn = t.add_bias_heads(attn, position_bias(t, qc, p + bias_name, wh, ww, ho));
        attn = t.softmax(attn, 2);
        attn = act(t, qc, p + ".attn.p.in", attn);
        Var out = t.bmm(attn, vh, false);
        int64_t B = t.val(out).dim(0) / ho;
        out = t.reshape(out, {B, ho, T, d});
        out = t.permute(out, {0, 2, 1, 3});
        out = t.reshape(out, {B, T, Co});
        Var merged = t.window_merge(out, wh, ww, N, Co, H, W);
        if (shifted) merged = t.roll(merged, sh, sw);
        return merged;
    }

    Var srwab(Tape& t, Var x, const std::string& p, QuantContext* qc, bool shifted) {
        int64_t C = cfg_.channels;
        Var y = layer_norm_block(t, p + ".ln1", x);
        Var q = conv_block(t, qc, p + ".q", y, {1, 0, 1});
        Var k = conv_block(t, qc, p + ".k", y, {1, 0, 1});
        Var v = conv_block(t, qc, p + ".v", y, {1, 0, 1});
        Var lepe = conv_block(t, qc, p + ".lepe", v, {1, 1, C});
        q = act(t, qc, p + ".attn.q.in", q);
        k = act(t, qc, p + ".attn.k.in", k);
        Var v2 = act(t, qc, p + ".attn.v.in", v);
        // first half of the heads scans horizontal windows, second half vertical
        Var a_h = orientation_attention(t, qc, p, ".bias_h", q, k, v2, 0, C / 2, cfg_.window_h, cfg_.window_w,
                                        shifted);
        Var a_v = orientation_attention(t, qc, p, ".bias_v", q, k, v2, C / 2, C, cfg_.window_w, cfg_.window_h,
                                        shifted);
        Var merged = t.add(t.concat_channels(a_h, a_v), lepe);
        x = t.add(x, conv_block(t, qc, p + ".proj", merged, {1, 0, 1}));
        Var y2 = layer_norm_block(t, p + ".ln2", x);
        Var h1 = t.gelu(conv_block(t, qc, p + ".mlp.fc1", y2, {1, 0, 1}));
        return t.add(x, conv_block(t, qc, p + ".mlp.fc2", h1, {1, 0, 1}));
    }

    Var hfb(Tape& t, Var xs, Var xh, const std::string& p, QuantContext* qc) {
        const Tensor& sv = t.val(xs);
        int64_t N = sv.dim(0), C = sv.dim(1), H = sv.dim(2), W = sv.dim(3);
        int64_t hid = cfg_.imlp_hidden();
        Var q = conv_block(t, qc, p + ".q", xh, {1, 0, 1});
        q = conv_block(t, qc, p + ".q_dw", q, {1, 1, C});
        Var yn = layer_norm_block(t, p + ".ln1", xs);
        Var k = conv_block(t, qc, p + ".k", yn, {1, 0, 1});
        k = conv_block(t, qc, p + ".k_dw", k, {1, 1, C});
        Var v = conv_block(t, qc, p + ".v", yn, {1, 0, 1});
        v = conv_block(t, qc, p + ".v_dw", v, {1, 1, C});
        Var qf = t.reshape(act(t, qc, p + ".attn.q.in", q), {N, C, H * W});
        Var kf = t.reshape(act(t, qc, p + ".attn.k.in", k), {N, C, H * W});
        Var vf = t.reshape(act(t, qc, p + ".attn.v.in", v), {N, C, H * W});
        Var scores = t.bmm(qf, kf, true);  // (N,C,C) channel attention
        scores = t.div_by_scalar(scores, t.exp_scalar(t.param(param(p + ".alpha_log"))));
        Var probs = act(t, qc, p + ".attn.p.in", t.softmax(scores, 2));
        Var fused = t.reshape(t.bmm(probs, vf, false), {N, C, H, W});
        Var xf = t.add(fused, xs);
        Var y2 = layer_norm_block(t, p + ".ln2", xf);
        Var b1 = conv_block(t, qc, p + ".imlp.b1", y2, {1, 0, 1});
        b1 = conv_block(t, qc, p + ".imlp.b1_dw", b1, {1, 1, hid});
        Var b2 = conv_block(t, qc, p + ".imlp.b2", y2, {1, 0, 1});
        b2 = conv_block(t, qc, p + ".imlp.b2_dw", b2, {1, 1, hid});
        Var gated = t.mul(t.gelu(b1), b2);
        return t.add(conv_block(t, qc, p + ".imlp.proj", gated, {1, 0, 1}), xf);
    }

    Var crfb(Tape& t, Var x, const std::string& p, QuantContext* qc) {
        Var xh = hferb(t, x, p + ".hferb", qc);
        Var xs = srwab(t, x, p + ".srwab1", qc, false);
        xs = srwab(t, xs, p + ".srwab2", qc, true);
        return hfb(t, xs, xh, p + ".hfb", qc);
    }
};

}  // namespace craft
