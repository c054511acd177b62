#pragma once

#include <functional>
#include <vector>

#include "craft/autograd.hpp"
#include "craft/rng.hpp"
#include "test_util.hpp"

namespace testutil {

using craft::Parameter;
using craft::Tape;
using craft::Var;

// Builds loss = mean(c .* op(inputs)) once on a recording tape and compares the
// accumulated input gradients against central finite differences of the same
// scalar evaluated without recording. Returns the worst relative error seen.
// Ops with genuine kinks (max, |.|, rounding) set reject_discontinuities so
// probes whose h and h/2 secants disagree are skipped.
struct GradCheckResult {
    double max_rel_err = 0.0;
    int probes = 0;
};

inline GradCheckResult check_gradients(const std::function<Var(Tape&, std::vector<Var>&)>& op,
                                       std::vector<Tensor> inputs, const std::vector<int>& diff_inputs,
                                       RngStream& rng, int probes_per_input = 6, double h = 1e-3,
                                       bool reject_discontinuities = false) {
    // probe loss once to size the weight tensor
    Tensor weights;
    auto eval_loss = [&](const std::vector<Tensor>& ins) -> double {
        Tape t;
        t.recording = false;
        std::vector<Var> vars;
        for (const auto& x : ins) vars.push_back(t.input(x));
        Var y = op(t, vars);
        const Tensor& yv = t.val(y);
        if (weights.numel() == 0) {
            weights = Tensor(yv.shape);
            for (auto& w : weights.data) w = float(rng.uniform(-1.0, 1.0));
        }
        double acc = 0;
        for (size_t i = 0; i < yv.data.size(); ++i) acc += double(yv.data[i]) * double(weights.data[i]);
        return acc / double(yv.numel());
    };
    eval_loss(inputs);

    std::vector<Parameter> params;
    params.reserve(inputs.size());
    for (auto& x : inputs) params.emplace_back(x);
    Tape t;
    std::vector<Var> vars;
    for (size_t i = 0; i < inputs.size(); ++i) {
        bool diff = std::find(diff_inputs.begin(), diff_inputs.end(), int(i)) != diff_inputs.end();
        vars.push_back(diff ? t.param(params[i]) : t.input(inputs[i]));
    }
    Var y = op(t, vars);
    Var loss = t.mean_all(t.mul(y, t.input(weights)));
    t.backward(loss);

    GradCheckResult res;
    for (int k : diff_inputs) {
        const Tensor& x = inputs[size_t(k)];
        const Tensor& grad = params[size_t(k)].grad;
        int probes = std::min<int>(probes_per_input, int(x.numel()));
        for (int p = 0; p < probes; ++p) {
            size_t flat = size_t(rng.uniform_int(0, x.numel() - 1));
            auto loss_at = [&](double v) {
                std::vector<Tensor> ins = inputs;
                ins[size_t(k)].data[flat] = float(v);
                return eval_loss(ins);
            };
            double x0 = x.data[flat];
            double fd = (loss_at(x0 + h) - loss_at(x0 - h)) / (2.0 * h);
            if (reject_discontinuities) {
                double fd2 = (loss_at(x0 + h / 2) - loss_at(x0 - h / 2)) / double(h);
                double denom = std::max({std::abs(fd), std::abs(fd2), 1e-3});
                if (std::abs(fd - fd2) / denom > 0.05) continue;
            }
            double an = grad.data[flat];
            double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
            res.max_rel_err = std::max(res.max_rel_err, std::abs(an - fd) / denom);
            ++res.probes;
        }
    }
    return res;
}

}  // namespace testutil
