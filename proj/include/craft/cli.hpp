#pragma once

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "freq.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "ptq.hpp"

namespace craft::cli {

// ------------------------------------------------------------------ plumbing

using FlagList = std::vector<std::pair<std::string, std::string>>;

inline std::string fmt6(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string git_describe() {
    std::string out;
    FILE* p = ::popen("git describe --always --dirty 2>/dev/null", "r");
    if (!p) return "unknown";
    char buf[256];
    while (std::fgets(buf, sizeof buf, p)) out += buf;
    ::pclose(p);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::ofstream open_output(const std::string& path) {
    std::ofstream f(path, std::ios::binary);  // binary keeps LF on every platform
    if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
    return f;
}

// Rerunning a command with the flags recorded here reproduces its outputs
// bit for bit; only the wall time differs.
inline void write_manifest(const std::string& out_path, const std::string& command,
                           const FlagList& flags, double wall_sec) {
    std::ofstream f = open_output(out_path + ".manifest");
    f << "command=" << command << "\n";
    for (const auto& [k, v] : flags) f << k << "=" << v << "\n";
    f << "git=" << git_describe() << "\n";
    f << "wall_time_sec=" << fmt6(wall_sec) << "\n";
    if (!f) throw std::runtime_error("failed writing manifest for '" + out_path + "'");
}

inline bool has_image_extension(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".ppm" || ext == ".png";
}

struct NamedImage {
    std::string name;
    Tensor rgb;  // (3, h, w) in [0, 1]
};

inline std::vector<NamedImage> read_image_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::invalid_argument("'" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<NamedImage> out;
    out.reserve(files.size());
    for (const auto& p : files) out.push_back({p.filename().string(), to_float(read_image(p.string()))});
    if (out.empty()) throw std::invalid_argument("no .ppm or .png images in '" + dir + "'");
    return out;
}

inline std::vector<double> parse_gammas(const std::string& s) {
    double a = 0, b = 0, step = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%lf%c", &a, &b, &step, &tail) != 3)
        throw std::invalid_argument("--gammas expects a:b:step, got '" + s + "'");
    if (step <= 0) throw std::invalid_argument("--gammas step must be positive");
    if (b < a) throw std::invalid_argument("--gammas needs a <= b");
    std::vector<double> gs;
    for (double g = a; g <= b + 1e-12; g += step) gs.push_back(std::min(g, 1.0));
    if (gs.empty()) throw std::invalid_argument("empty gamma list");
    return gs;
}

inline std::vector<int64_t> parse_thetas(const std::string& s) {
    std::vector<int64_t> ts;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!tok.empty()) {
            int64_t t = std::stoll(tok);
            if (t < 1 || t % 2 == 0) throw std::invalid_argument("--thetas entries must be odd and positive");
            ts.push_back(t);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (ts.empty()) throw std::invalid_argument("empty theta list");
    return ts;
}

inline Tensor rank3(const Tensor& batched) {
    return batched.reshaped({batched.dim(1), batched.dim(2), batched.dim(3)});
}

inline Tensor rank4(const Tensor& img) {
    return img.reshaped({1, img.dim(0), img.dim(1), img.dim(2)});
}

// The window layout fixes the head count; channels must split across an even
// number of heads, at most the default six.
inline int derive_heads(int channels) {
    for (int h : {6, 4, 2})
        if (channels % h == 0) return h;
    throw std::invalid_argument("channels must be divisible by an even head count (2, 4 or 6)");
}

// ------------------------------------------------------------------ train

struct TrainOpts {
    std::string data = "synthetic";
    int scale = 2;
    int iters = 200;
    int batch = 4;
    double lr = 1e-3;
    int channels = 16;
    int rcrfg = 1;
    int crfb = 2;
    int patch = 48;
    uint64_t seed = 0;
    std::string out;

    FlagList flags() const {
        return {{"data", data},
                {"scale", std::to_string(scale)},
                {"iters", std::to_string(iters)},
                {"batch", std::to_string(batch)},
                {"lr", fmt6(lr)},
                {"channels", std::to_string(channels)},
                {"rcrfg", std::to_string(rcrfg)},
                {"crfb", std::to_string(crfb)},
                {"patch", std::to_string(patch)},
                {"seed", std::to_string(seed)},
                {"out", out}};
    }
};

inline Tensor crop_patch(const Tensor& img, int64_t y0, int64_t x0, int64_t side) {
    Tensor out({3, side, side});
    int64_t h = img.dim(1), w = img.dim(2);
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < side; ++y) {
            const float* src = img.data.data() + ((c * h + y0 + y) * w + x0);
            std::copy(src, src + side, out.data.data() + ((c * side + y) * side));
        }
    return out;
}

inline int cmd_train(const TrainOpts& o) {
    Stopwatch watch;
    if (o.iters < 0) throw std::invalid_argument("--iters must be >= 0");
    if (o.batch < 1) throw std::invalid_argument("--batch must be >= 1");
    if (o.patch < o.scale) throw std::invalid_argument("--patch must be at least the scale factor");

    CraftConfig cfg;
    cfg.channels = o.channels;
    cfg.heads = derive_heads(o.channels);
    cfg.n_groups = o.rcrfg;
    cfg.n_crfb = o.crfb;
    cfg.scale = o.scale;
    cfg.seed = o.seed;
    CraftModel model(cfg);

    bool synthetic = o.data == "synthetic";
    std::vector<Tensor> pool;
    if (!synthetic) {
        for (auto& img : read_image_dir(o.data))
            if (img.rgb.dim(1) >= o.patch && img.rgb.dim(2) >= o.patch) pool.push_back(std::move(img.rgb));
        if (pool.empty())
            throw std::invalid_argument("no images of at least " + std::to_string(o.patch) + "x" +
                                        std::to_string(o.patch) + " in '" + o.data + "'");
    }

    RngStream crop_rng(o.seed, "train.crop");
    std::vector<Parameter*> params = model.parameters();
    Adam opt;
    std::vector<std::pair<int, double>> loss_log;

    for (int it = 0; it < o.iters; ++it) {
        std::vector<Tensor> lrs, hrs;
        for (int b = 0; b < o.batch; ++b) {
            Tensor hr;
            if (synthetic) {
                hr = synth_image(o.seed, uint64_t(it) * uint64_t(o.batch) + uint64_t(b), o.patch, o.patch);
            } else {
                const Tensor& src = pool[size_t(crop_rng.uniform_int(0, int64_t(pool.size()) - 1))];
                int64_t y0 = crop_rng.uniform_int(0, src.dim(1) - o.patch);
                int64_t x0 = crop_rng.uniform_int(0, src.dim(2) - o.patch);
                hr = crop_patch(src, y0, x0, o.patch);
            }
            DegradedPair pair = degrade(hr, o.scale);
            lrs.push_back(std::move(pair.lr));
            hrs.push_back(std::move(pair.hr));
        }
        Tape t;
        Var out = model.forward(t, t.input(ptq_detail::stack3(lrs, 0, lrs.size())));
        Var loss = t.l1_loss(out, t.input(ptq_detail::stack3(hrs, 0, hrs.size())), L1Reduction::element_mean);
        t.backward(loss);
        opt.step(params, o.lr);
        if ((it + 1) % 100 == 0) {
            double lv = double(t.val(loss).data[0]);
            loss_log.emplace_back(it + 1, lv);
            std::fprintf(stderr, "iter %d loss %s\n", it + 1, fmt6(lv).c_str());
        }
    }

    model.save(o.out);
    std::ofstream csv = open_output(o.out + ".loss.csv");
    csv << "iter,loss\n";
    for (auto& [it, lv] : loss_log) csv << it << "," << fmt6(lv) << "\n";
    csv.close();
    write_manifest(o.out, "train", o.flags(), watch.seconds());
    return 0;
}

// ------------------------------------------------------------------ sr

struct SrOpts {
    std::string model, input, output;
    bool quantized = false;

    FlagList flags() const {
        return {{"model", model}, {"input", input}, {"output", output}, {"quantized", quantized ? "1" : "0"}};
    }
};

inline int cmd_sr(const SrOpts& o) {
    Stopwatch watch;
    std::vector<QuantSiteRecord> records;
    CraftModel model = CraftModel::load(o.model, &records);
    QuantContext ctx;
    if (o.quantized) {
        if (records.empty()) throw std::runtime_error("checkpoint '" + o.model + "' has no quantization sites");
        ctx = context_from_records(records);
    }

    Tensor in = to_float(read_image(o.input));
    Stopwatch infer_watch;
    Tensor sr = model.infer(rank4(in), o.quantized ? &ctx : nullptr);
    double infer_sec = infer_watch.seconds();
    write_image(o.output, to_u8(rank3(sr)));

    std::printf("3x%lldx%lld -> 3x%lldx%lld in %s s\n", (long long)in.dim(1), (long long)in.dim(2),
                (long long)sr.dim(2), (long long)sr.dim(3), fmt6(infer_sec).c_str());
    write_manifest(o.output, "sr", o.flags(), watch.seconds());
    return 0;
}

// ------------------------------------------------------------------ freq-drop

struct FreqDropOpts {
    std::string model, data, mode, gammas, thetas, out;

    FlagList flags() const {
        return {{"model", model}, {"data", data},     {"mode", mode},
                {"gammas", gammas}, {"thetas", thetas}, {"out", out}};
    }
};

inline int cmd_freq_drop(const FreqDropOpts& o) {
    Stopwatch watch;
    if (o.mode != "D" && o.mode != "E") throw std::invalid_argument("--mode must be D or E");
    if (o.gammas.empty() == o.thetas.empty())
        throw std::invalid_argument("provide exactly one of --gammas or --thetas");

    std::vector<QuantSiteRecord> records;
    CraftModel model = CraftModel::load(o.model, &records);
    QuantContext ctx;
    QuantContext* qc = nullptr;
    if (!records.empty()) {
        ctx = context_from_records(records);
        qc = &ctx;
    }

    std::vector<Tensor> hrs;
    for (auto& img : read_image_dir(o.data)) hrs.push_back(std::move(img.rgb));

    std::ofstream csv = open_output(o.out);
    csv << "x,ratio\n";
    if (!o.gammas.empty()) {
        DropMode mode = o.mode == "D" ? DropMode::degraded_reference : DropMode::pristine_reference;
        for (const DropPoint& pt : drop_ratio_curve(model, hrs, parse_gammas(o.gammas), mode, qc))
            csv << fmt6(pt.gamma) << "," << fmt6(pt.ratio) << "\n";
    } else {
        // theta = 1 is the identity filter; it anchors the ratio at zero the
        // same way gamma = 0 anchors the band-limited sweep
        std::vector<int64_t> thetas = parse_thetas(o.thetas);
        std::vector<int64_t> with_base = thetas;
        with_base.insert(with_base.begin(), 1);
        auto curve = mean_filter_curve(model, hrs, with_base, qc);
        double p0 = curve[0].mean_psnr;
        for (size_t i = 1; i < curve.size(); ++i)
            csv << curve[i].theta << "," << fmt6((curve[i].mean_psnr - p0) / p0) << "\n";
    }
    csv.close();
    write_manifest(o.out, "freq-drop", o.flags(), watch.seconds());
    return 0;
}

// ------------------------------------------------------------------ quantize

struct QuantizeOpts {
    std::string model;
    std::string calib = "synthetic";
    int bits = 8;
    std::string method = "fgo";
    int epochs = 10;
    double lr = -1.0;
    double beta = 0.9;
    uint64_t seed = 0;
    int calib_count = 8;
    int calib_patch = 48;
    std::string out;

    FlagList flags() const {
        return {{"model", model},
                {"calib", calib},
                {"bits", std::to_string(bits)},
                {"method", method},
                {"epochs", std::to_string(epochs)},
                {"lr", fmt6(lr)},
                {"beta", fmt6(beta)},
                {"seed", std::to_string(seed)},
                {"calib-count", std::to_string(calib_count)},
                {"calib-patch", std::to_string(calib_patch)},
                {"out", out}};
    }
};

inline int cmd_quantize(const QuantizeOpts& o) {
    Stopwatch watch;
    if (o.bits != 4 && o.bits != 6 && o.bits != 8)
        throw std::invalid_argument("--bits must be one of 4, 6, 8");

    std::vector<QuantSiteRecord> records;
    CraftModel model = CraftModel::load(o.model, &records);
    if (!records.empty()) throw std::runtime_error("checkpoint '" + o.model + "' is already quantized");

    std::vector<Tensor> calib;
    if (o.calib == "synthetic") {
        if (o.calib_count < 1) throw std::invalid_argument("--calib-count must be >= 1");
        for (int i = 0; i < o.calib_count; ++i)
            calib.push_back(synth_image(o.seed, uint64_t(i), o.calib_patch, o.calib_patch));
    } else {
        for (auto& img : read_image_dir(o.calib)) calib.push_back(std::move(img.rgb));
    }

    PtqConfig pc;
    pc.bits = o.bits;
    pc.method = ptq_method_from(o.method);
    pc.epochs = o.epochs;
    pc.lr = o.lr;
    pc.ema_beta = o.beta;
    PtqResult res = ptq_calibrate(model, calib, pc);
    std::fprintf(stderr, "calibrated %zu sites\n", res.ctx.sites().size());

    auto recs = site_records(res.ctx);
    model.save(o.out, recs);

    std::ofstream sites = open_output(o.out + ".sites.csv");
    sites << "site,kind,criterion,bits,l,u\n";
    for (const QuantSiteRecord& r : recs)
        sites << r.name << "," << (r.kind == 0 ? "weight" : "activation") << ","
              << (r.crit == 0 ? "feature" : "fgo") << "," << r.bits << "," << fmt6(r.l) << ","
              << fmt6(r.u) << "\n";
    sites.close();

    double before = res.initial_loss, after = res.final_loss;
    if (res.epoch_losses.empty()) {
        // baselines and --epochs 0 never measure a refinement loss; report the
        // plain calibration loss for both phases
        std::vector<Tensor> refs;
        for (const Tensor& img : calib) refs.push_back(rank3(model.infer(rank4(img))));
        before = after = ptq_detail::calibration_loss(model, res.ctx, calib, refs, 2);
    }
    std::ofstream loss = open_output(o.out + ".loss.csv");
    loss << "phase,loss\n";
    loss << "before," << fmt6(before) << "\n";
    for (size_t e = 0; e < res.epoch_losses.size(); ++e)
        loss << "epoch_" << (e + 1) << "," << fmt6(res.epoch_losses[e]) << "\n";
    loss << "after," << fmt6(after) << "\n";
    loss.close();

    write_manifest(o.out, "quantize", o.flags(), watch.seconds());
    return 0;
}

// ------------------------------------------------------------------ eval

struct EvalOpts {
    std::string model, data;
    int scale = 0;  // 0 -> follow the checkpoint
    std::string metrics = "psnr,ssim";
    std::string out;

    FlagList flags() const {
        return {{"model", model},
                {"data", data},
                {"scale", std::to_string(scale)},
                {"metrics", metrics},
                {"out", out}};
    }
};

inline int cmd_eval(const EvalOpts& o) {
    Stopwatch watch;
    bool want_psnr = false, want_ssim = false;
    {
        size_t pos = 0;
        while (pos <= o.metrics.size()) {
            size_t comma = o.metrics.find(',', pos);
            std::string tok = o.metrics.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (tok == "psnr")
                want_psnr = true;
            else if (tok == "ssim")
                want_ssim = true;
            else if (!tok.empty())
                throw std::invalid_argument("unknown metric '" + tok + "'");
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (!want_psnr && !want_ssim) throw std::invalid_argument("--metrics selects nothing");
    }

    std::vector<QuantSiteRecord> records;
    CraftModel model = CraftModel::load(o.model, &records);
    QuantContext ctx;
    QuantContext* qc = nullptr;
    if (!records.empty()) {
        ctx = context_from_records(records);
        qc = &ctx;
    }
    int64_t r = model.config().scale;
    if (o.scale != 0 && o.scale != int(r))
        throw std::runtime_error("checkpoint is x" + std::to_string(r) + " but --scale asked for x" +
                                 std::to_string(o.scale));

    auto images = read_image_dir(o.data);
    std::ofstream csv = open_output(o.out);
    csv << "image";
    if (want_psnr) csv << ",psnr";
    if (want_ssim) csv << ",ssim";
    csv << "\n";

    std::vector<double> psnrs, ssims;
    for (const NamedImage& img : images) {
        DegradedPair pair = degrade(img.rgb, r);
        Tensor sr = rank3(model.infer(rank4(pair.lr), qc));
        csv << img.name;
        if (want_psnr) {
            double p = psnr_y(sr, pair.hr, r);
            psnrs.push_back(p);
            csv << "," << fmt6(p);
        }
        if (want_ssim) {
            double s = ssim_y(sr, pair.hr, r);
            ssims.push_back(s);
            csv << "," << fmt6(s);
        }
        csv << "\n";
    }
    csv << "mean";
    if (want_psnr) csv << "," << fmt6(mean_psnr(psnrs));
    if (want_ssim) {
        double acc = 0;
        for (double s : ssims) acc += s;
        csv << "," << fmt6(acc / double(ssims.size()));
    }
    csv << "\n";
    csv.close();
    write_manifest(o.out, "eval", o.flags(), watch.seconds());
    return 0;
}

// ------------------------------------------------------------------ spectrum

struct SpectrumOpts {
    std::string input, compare, out;

    FlagList flags() const { return {{"input", input}, {"compare", compare}, {"out", out}}; }
};

inline int cmd_spectrum(const SpectrumOpts& o) {
    Stopwatch watch;
    Tensor a = to_float(read_image(o.input));
    std::vector<double> pa = log_amplitude_spectrum(a);

    std::ofstream csv = open_output(o.out);
    if (o.compare.empty()) {
        csv << "radius,log_amplitude\n";
        for (size_t i = 0; i < pa.size(); ++i) csv << i << "," << fmt6(pa[i]) << "\n";
    } else {
        Tensor b = to_float(read_image(o.compare));
        if (a.shape != b.shape)
            throw std::invalid_argument("size mismatch between --input and --compare images");
        std::vector<double> pb = log_amplitude_spectrum(b);
        Tensor resid = residual_spectrum(a, b);
        std::vector<double> rm(resid.data.begin(), resid.data.end());
        std::vector<double> pr = radial_mean(rm, resid.dim(0), resid.dim(1));
        csv << "radius,log_amplitude_a,log_amplitude_b,residual\n";
        for (size_t i = 0; i < pa.size(); ++i)
            csv << i << "," << fmt6(pa[i]) << "," << fmt6(pb[i]) << "," << fmt6(pr[i]) << "\n";
    }
    csv.close();
    write_manifest(o.out, "spectrum", o.flags(), watch.seconds());
    return 0;
}

// ------------------------------------------------------------------ driver

inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"CRAFT super-resolution: training, inference, frequency analysis and quantization"};
    app.require_subcommand(1);

    TrainOpts tr;
    auto* train = app.add_subcommand("train", "Train a model on synthetic or directory data");
    train->add_option("--data", tr.data, "'synthetic' or an image directory");
    train->add_option("--scale", tr.scale)->check(CLI::IsMember({2, 3, 4}));
    train->add_option("--iters", tr.iters);
    train->add_option("--batch", tr.batch);
    train->add_option("--lr", tr.lr);
    train->add_option("--channels", tr.channels);
    train->add_option("--rcrfg", tr.rcrfg, "residual groups");
    train->add_option("--crfb", tr.crfb, "blocks per group");
    train->add_option("--patch", tr.patch, "HR patch side");
    train->add_option("--seed", tr.seed);
    train->add_option("--out", tr.out)->required();

    SrOpts sr;
    auto* srcmd = app.add_subcommand("sr", "Upscale one image with a checkpoint");
    srcmd->add_option("--model", sr.model)->required();
    srcmd->add_option("--input", sr.input)->required();
    srcmd->add_option("--output", sr.output)->required();
    srcmd->add_flag("--quantized", sr.quantized, "apply the checkpoint's quantization sites");

    FreqDropOpts fd;
    auto* drop = app.add_subcommand("freq-drop", "Frequency ablation sweeps over a dataset");
    drop->add_option("--model", fd.model)->required();
    drop->add_option("--data", fd.data)->required();
    drop->add_option("--mode", fd.mode, "D (degraded reference) or E (pristine reference)")->required();
    drop->add_option("--gammas", fd.gammas, "a:b:step sweep of the drop fraction");
    drop->add_option("--thetas", fd.thetas, "comma list of odd mean-filter windows");
    drop->add_option("--out", fd.out)->required();

    QuantizeOpts qz;
    auto* quant = app.add_subcommand("quantize", "Post-training quantization of a checkpoint");
    quant->add_option("--model", qz.model)->required();
    quant->add_option("--calib", qz.calib, "'synthetic' or an image directory");
    quant->add_option("--bits", qz.bits)->check(CLI::IsMember({4, 6, 8}));
    quant->add_option("--method", qz.method)->check(CLI::IsMember({"fgo", "feature", "minmax", "percentile"}));
    quant->add_option("--epochs", qz.epochs, "boundary refinement epochs, 0 skips");
    quant->add_option("--lr", qz.lr, "refinement step size, negative picks by bit width");
    quant->add_option("--beta", qz.beta, "EMA smoothing");
    quant->add_option("--seed", qz.seed);
    quant->add_option("--calib-count", qz.calib_count, "synthetic patch count");
    quant->add_option("--calib-patch", qz.calib_patch, "synthetic patch side");
    quant->add_option("--out", qz.out)->required();

    EvalOpts ev;
    auto* eval = app.add_subcommand("eval", "PSNR/SSIM over a directory of HR images");
    eval->add_option("--model", ev.model)->required();
    eval->add_option("--data", ev.data)->required();
    eval->add_option("--scale", ev.scale, "cross-check against the checkpoint");
    eval->add_option("--metrics", ev.metrics, "comma subset of psnr,ssim");
    eval->add_option("--out", ev.out)->required();

    SpectrumOpts sp;
    auto* spec = app.add_subcommand("spectrum", "Radial log-amplitude profile of an image");
    spec->add_option("--input", sp.input)->required();
    spec->add_option("--compare", sp.compare, "second image for a residual profile");
    spec->add_option("--out", sp.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(tr);
        if (srcmd->parsed()) return cmd_sr(sr);
        if (drop->parsed()) return cmd_freq_drop(fd);
        if (quant->parsed()) return cmd_quantize(qz);
        if (eval->parsed()) return cmd_eval(ev);
        if (spec->parsed()) return cmd_spectrum(sp);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;  // unreachable with require_subcommand(1)
}

}  // namespace craft::cli
