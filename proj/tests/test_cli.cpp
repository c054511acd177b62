#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "craft/cli.hpp"
#include "support/test_util.hpp"

using Catch::Approx;
using craft::CraftConfig;
using craft::CraftModel;
using craft::Tensor;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const char* name) {
    fs::path p = fs::temp_directory_path() / "craft_cli_test" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("craft");
    for (const auto& a : args) argv.push_back(a.c_str());
    return craft::cli::cli_main(int(argv.size()), argv.data());
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) lines.push_back(line);
    return lines;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_synth_ppm(const fs::path& p, uint64_t seed, uint64_t index, int64_t side) {
    craft::write_image(p.string(), craft::to_u8(craft::synth_image(seed, index, side, side)));
}

// Small x2 model saved straight from initialization.
std::string init_checkpoint(const fs::path& dir, uint64_t seed = 3) {
    CraftConfig cfg;
    cfg.channels = 16;
    cfg.heads = 4;
    cfg.n_groups = 1;
    cfg.n_crfb = 1;
    cfg.scale = 2;
    cfg.seed = seed;
    CraftModel m(cfg);
    std::string path = (dir / "toy.ckpt").string();
    m.save(path);
    return path;
}

}  // namespace

TEST_CASE("numeric formatting is fixed width with infinity sentinels") {
    CHECK(craft::cli::fmt6(1.0) == "1.000000");
    CHECK(craft::cli::fmt6(0.123456789) == "0.123457");
    CHECK(craft::cli::fmt6(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(craft::cli::fmt6(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(craft::cli::fmt6(std::nan("")) == "nan");
}

TEST_CASE("gamma and theta sweep specifications parse strictly") {
    auto single = craft::cli::parse_gammas("0:0:1");
    REQUIRE(single.size() == 1);
    CHECK(single[0] == 0.0);

    auto three = craft::cli::parse_gammas("0:0.5:0.25");
    REQUIRE(three.size() == 3);
    CHECK(three[2] == Approx(0.5));

    CHECK_THROWS_AS(craft::cli::parse_gammas("0.5"), std::invalid_argument);
    CHECK_THROWS_AS(craft::cli::parse_gammas("0:1:0"), std::invalid_argument);
    CHECK_THROWS_AS(craft::cli::parse_gammas("1:0:0.5"), std::invalid_argument);
    CHECK_THROWS_AS(craft::cli::parse_gammas("0:1:0.5x"), std::invalid_argument);

    auto ts = craft::cli::parse_thetas("3,5,7");
    REQUIRE(ts == std::vector<int64_t>({3, 5, 7}));
    CHECK_THROWS_AS(craft::cli::parse_thetas("4"), std::invalid_argument);
    CHECK_THROWS_AS(craft::cli::parse_thetas(""), std::invalid_argument);
}

TEST_CASE("head count derivation prefers the widest even split") {
    CHECK(craft::cli::derive_heads(48) == 6);
    CHECK(craft::cli::derive_heads(16) == 4);
    CHECK(craft::cli::derive_heads(10) == 2);
    CHECK_THROWS_AS(craft::cli::derive_heads(9), std::invalid_argument);
}

TEST_CASE("train with zero iterations writes the initialization") {
    auto dir = fresh_dir("train_zero");
    std::string out = (dir / "m.ckpt").string();
    REQUIRE(run_cli({"train", "--iters", "0", "--channels", "16", "--rcrfg", "1", "--crfb", "1",
                     "--scale", "2", "--seed", "3", "--out", out}) == 0);

    CraftModel trained = CraftModel::load(out);
    CraftConfig cfg;
    cfg.channels = 16;
    cfg.heads = 4;
    cfg.n_groups = 1;
    cfg.n_crfb = 1;
    cfg.scale = 2;
    cfg.seed = 3;
    CraftModel reference(cfg);
    const auto& a = trained.params();
    const auto& b = reference.params();
    REQUIRE(a.size() == b.size());
    for (const auto& [name, pa] : a) {
        const Tensor& ta = pa.value;
        const Tensor& tb = b.at(name).value;
        REQUIRE(ta.shape == tb.shape);
        for (size_t i = 0; i < ta.data.size(); ++i) REQUIRE(ta.data[i] == tb.data[i]);
    }

    auto manifest = read_lines(dir / "m.ckpt.manifest");
    CHECK(manifest[0] == "command=train");
    bool has_seed = false, has_wall = false;
    for (auto& l : manifest) {
        has_seed = has_seed || l == "seed=3";
        has_wall = has_wall || l.rfind("wall_time_sec=", 0) == 0;
    }
    CHECK(has_seed);
    CHECK(has_wall);
    CHECK(read_lines(dir / "m.ckpt.loss.csv")[0] == "iter,loss");
}

TEST_CASE("training is reproducible from the seed") {
    auto dir = fresh_dir("train_seed");
    std::string a = (dir / "a.ckpt").string(), b = (dir / "b.ckpt").string(), c = (dir / "c.ckpt").string();
    std::vector<std::string> base = {"train", "--iters",  "2",  "--batch", "2",    "--patch", "16",
                                     "--channels", "16", "--rcrfg", "1", "--crfb", "1", "--scale", "2"};
    auto with = [&](const std::string& seed, const std::string& out) {
        auto v = base;
        v.insert(v.end(), {"--seed", seed, "--out", out});
        return v;
    };
    REQUIRE(run_cli(with("7", a)) == 0);
    REQUIRE(run_cli(with("7", b)) == 0);
    REQUIRE(run_cli(with("8", c)) == 0);
    CHECK(read_bytes(a) == read_bytes(b));
    CHECK(read_bytes(a) != read_bytes(c));
}

TEST_CASE("train consumes directory data and reports unusable patches") {
    auto dir = fresh_dir("train_dir");
    auto data = dir / "data";
    fs::create_directories(data);
    write_synth_ppm(data / "a.ppm", 21, 0, 24);
    write_synth_ppm(data / "b.ppm", 21, 1, 24);

    std::string out = (dir / "m.ckpt").string();
    REQUIRE(run_cli({"train", "--data", data.string(), "--iters", "1", "--batch", "2", "--patch", "16",
                     "--channels", "16", "--rcrfg", "1", "--crfb", "1", "--scale", "2", "--out",
                     out}) == 0);
    REQUIRE(fs::exists(out));

    // every image smaller than the patch -> nothing to crop
    CHECK(run_cli({"train", "--data", data.string(), "--iters", "1", "--patch", "64", "--channels",
                   "16", "--rcrfg", "1", "--crfb", "1", "--scale", "2", "--out",
                   (dir / "n.ckpt").string()}) == 1);
}

TEST_CASE("sr writes a deterministic upscale and honours the sentinel sites") {
    auto dir = fresh_dir("sr");
    std::string ckpt = init_checkpoint(dir);
    write_synth_ppm(dir / "in.ppm", 31, 0, 20);

    std::string out1 = (dir / "o1.png").string(), out2 = (dir / "o2.png").string();
    REQUIRE(run_cli({"sr", "--model", ckpt, "--input", (dir / "in.ppm").string(), "--output", out1}) == 0);
    REQUIRE(run_cli({"sr", "--model", ckpt, "--input", (dir / "in.ppm").string(), "--output", out2}) == 0);
    CHECK(read_bytes(out1) == read_bytes(out2));

    craft::ImageU8 img = craft::read_image(out1);
    CHECK(img.h == 40);
    CHECK(img.w == 40);

    // pass-through sites on every quantization point leave the output untouched
    std::vector<craft::QuantSiteRecord> records;
    {
        CraftModel m = CraftModel::load(ckpt);
        craft::QuantContext observe;
        observe.mode = craft::QuantMode::observe;
        m.infer(craft::cli::rank4(craft::to_float(craft::read_image((dir / "in.ppm").string()))), &observe);
        for (const auto& s : observe.sites()) {
            craft::QuantSiteRecord r;
            r.name = s.name;
            r.kind = uint8_t(s.kind);
            r.crit = uint8_t(s.crit);
            r.l = 0.f;
            r.u = 1.f;
            r.bits = 32;
            records.push_back(std::move(r));
        }
        REQUIRE(!records.empty());
        m.save((dir / "fp32sites.ckpt").string(), records);
    }
    std::string out3 = (dir / "o3.png").string();
    REQUIRE(run_cli({"sr", "--model", (dir / "fp32sites.ckpt").string(), "--input",
                     (dir / "in.ppm").string(), "--output", out3, "--quantized"}) == 0);
    CHECK(read_bytes(out1) == read_bytes(out3));

    // asking for quantization without sites is an error
    CHECK(run_cli({"sr", "--model", ckpt, "--input", (dir / "in.ppm").string(), "--output",
                   (dir / "o4.png").string(), "--quantized"}) == 1);
}

TEST_CASE("quantize writes checkpoint, site dump and loss phases") {
    auto dir = fresh_dir("quantize");
    std::string ckpt = init_checkpoint(dir);
    std::string out = (dir / "q.ckpt").string();
    REQUIRE(run_cli({"quantize", "--model", ckpt, "--bits", "4", "--method", "fgo", "--epochs", "0",
                     "--calib-count", "2", "--calib-patch", "16", "--seed", "11", "--out", out}) == 0);

    std::vector<craft::QuantSiteRecord> records;
    CraftModel::load(out, &records);
    REQUIRE(!records.empty());

    auto sites = read_lines(dir / "q.ckpt.sites.csv");
    CHECK(sites[0] == "site,kind,criterion,bits,l,u");
    bool fgo_row = false, io_eight = false;
    for (auto& l : sites) {
        fgo_row = fgo_row || l.find(",fgo,") != std::string::npos;
        io_eight = io_eight || l.rfind("model.in,activation,fgo,8,", 0) == 0;
    }
    CHECK(fgo_row);
    CHECK(io_eight);

    auto loss = read_lines(dir / "q.ckpt.loss.csv");
    REQUIRE(loss.size() == 3);  // header, before, after: no refinement epochs
    CHECK(loss[0] == "phase,loss");
    CHECK(loss[1].substr(0, 7) == "before,");
    CHECK(loss[2].substr(0, 6) == "after,");
    CHECK(loss[1].substr(7) == loss[2].substr(6));  // identical loss when refinement is skipped

    // skipping refinement leaves exactly the stage-1 boundaries in the checkpoint
    CraftModel fresh = CraftModel::load(ckpt);
    craft::PtqConfig pc;
    pc.bits = 4;
    pc.method = craft::PtqMethod::fgo;
    pc.epochs = 0;
    std::vector<Tensor> calib;
    for (int i = 0; i < 2; ++i) calib.push_back(craft::synth_image(11, uint64_t(i), 16, 16));
    auto expect = craft::site_records(craft::ptq_calibrate(fresh, calib, pc).ctx);
    REQUIRE(records.size() == expect.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].name == expect[i].name);
        CHECK(records[i].l == expect[i].l);
        CHECK(records[i].u == expect[i].u);
        CHECK(records[i].bits == expect[i].bits);
    }

    CHECK(run_cli({"quantize", "--model", out, "--out", (dir / "qq.ckpt").string()}) == 1);
    CHECK(run_cli({"quantize", "--model", ckpt, "--bits", "5", "--out", (dir / "q5.ckpt").string()}) == 2);
}

TEST_CASE("freq-drop emits anchored sweeps and rejects ambiguous requests") {
    auto dir = fresh_dir("freqdrop");
    std::string ckpt = init_checkpoint(dir);
    auto data = dir / "data";
    fs::create_directories(data);
    write_synth_ppm(data / "a.ppm", 41, 0, 24);
    write_synth_ppm(data / "b.ppm", 41, 1, 24);

    std::string d_csv = (dir / "d.csv").string(), e_csv = (dir / "e.csv").string();
    REQUIRE(run_cli({"freq-drop", "--model", ckpt, "--data", data.string(), "--mode", "D", "--gammas",
                     "0:0:1", "--out", d_csv}) == 0);
    REQUIRE(run_cli({"freq-drop", "--model", ckpt, "--data", data.string(), "--mode", "E", "--gammas",
                     "0:0:1", "--out", e_csv}) == 0);
    auto d_rows = read_lines(d_csv);
    auto e_rows = read_lines(e_csv);
    REQUIRE(d_rows.size() == 2);
    CHECK(d_rows[0] == "x,ratio");
    CHECK(d_rows[1] == "0.000000,0.000000");
    CHECK(d_rows == e_rows);  // both modes agree at gamma = 0

    std::string t_csv = (dir / "t.csv").string();
    REQUIRE(run_cli({"freq-drop", "--model", ckpt, "--data", data.string(), "--mode", "E", "--thetas",
                     "3", "--out", t_csv}) == 0);
    auto t_rows = read_lines(t_csv);
    REQUIRE(t_rows.size() == 2);
    CHECK(t_rows[1].rfind("3,", 0) == 0);

    CHECK(run_cli({"freq-drop", "--model", ckpt, "--data", data.string(), "--mode", "D", "--gammas",
                   "0:0:1", "--thetas", "3", "--out", (dir / "x.csv").string()}) == 1);
    CHECK(run_cli({"freq-drop", "--model", ckpt, "--data", data.string(), "--mode", "D", "--out",
                   (dir / "y.csv").string()}) == 1);
    CHECK(run_cli({"freq-drop", "--model", ckpt, "--data", data.string(), "--mode", "Q", "--gammas",
                   "0:0:1", "--out", (dir / "z.csv").string()}) == 1);
}

TEST_CASE("eval reports per-image rows, a mean row and strict flags") {
    auto dir = fresh_dir("eval");
    std::string ckpt = init_checkpoint(dir);
    auto data = dir / "data";
    fs::create_directories(data);
    write_synth_ppm(data / "a.ppm", 51, 0, 24);
    write_synth_ppm(data / "b.ppm", 51, 1, 24);

    std::string csv = (dir / "m.csv").string();
    REQUIRE(run_cli({"eval", "--model", ckpt, "--data", data.string(), "--out", csv}) == 0);
    auto rows = read_lines(csv);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "image,psnr,ssim");
    CHECK(rows[1].rfind("a.ppm,", 0) == 0);
    CHECK(rows[2].rfind("b.ppm,", 0) == 0);
    CHECK(rows[3].rfind("mean,", 0) == 0);

    std::string csv2 = (dir / "m2.csv").string();
    REQUIRE(run_cli({"eval", "--model", ckpt, "--data", data.string(), "--out", csv2}) == 0);
    CHECK(read_bytes(csv) == read_bytes(csv2));

    std::string psnr_only = (dir / "p.csv").string();
    REQUIRE(run_cli({"eval", "--model", ckpt, "--data", data.string(), "--metrics", "psnr", "--out",
                     psnr_only}) == 0);
    CHECK(read_lines(psnr_only)[0] == "image,psnr");

    CHECK(run_cli({"eval", "--model", ckpt, "--data", data.string(), "--metrics", "mse", "--out",
                   (dir / "x.csv").string()}) == 1);
    CHECK(run_cli({"eval", "--model", ckpt, "--data", data.string(), "--scale", "4", "--out",
                   (dir / "y.csv").string()}) == 1);
    CHECK(run_cli({"eval", "--model", ckpt, "--data", (dir / "empty").string(), "--out",
                   (dir / "z.csv").string()}) == 1);
}

TEST_CASE("spectrum profiles an image and zeros the self-residual") {
    auto dir = fresh_dir("spectrum");
    craft::Tensor flat({3, 16, 16}, 0.5f);
    craft::write_image((dir / "flat.ppm").string(), craft::to_u8(flat));
    craft::write_image((dir / "flat24.ppm").string(), craft::to_u8(craft::Tensor({3, 24, 24}, 0.5f)));
    write_synth_ppm(dir / "tex.ppm", 61, 0, 16);

    std::string solo = (dir / "solo.csv").string();
    REQUIRE(run_cli({"spectrum", "--input", (dir / "flat.ppm").string(), "--out", solo}) == 0);
    auto rows = read_lines(solo);
    REQUIRE(rows.size() == 10);  // header + radii 0..8
    CHECK(rows[0] == "radius,log_amplitude");
    for (size_t i = 2; i < rows.size(); ++i) {
        double v = std::stod(rows[i].substr(rows[i].find(',') + 1));
        CHECK(v == Approx(0.0).margin(1e-6));  // constant image: nothing outside DC
    }

    std::string self = (dir / "self.csv").string();
    REQUIRE(run_cli({"spectrum", "--input", (dir / "tex.ppm").string(), "--compare",
                     (dir / "tex.ppm").string(), "--out", self}) == 0);
    auto srows = read_lines(self);
    CHECK(srows[0] == "radius,log_amplitude_a,log_amplitude_b,residual");
    for (size_t i = 1; i < srows.size(); ++i) {
        std::string row = srows[i];
        size_t last = row.rfind(',');
        CHECK(std::stod(row.substr(last + 1)) == Approx(0.0).margin(1e-6));
    }

    CHECK(run_cli({"spectrum", "--input", (dir / "tex.ppm").string(), "--compare",
                   (dir / "flat24.ppm").string(), "--out", (dir / "x.csv").string()}) == 1);
}

TEST_CASE("reruns reproduce outputs bit for bit with fresh wall time") {
    auto dir = fresh_dir("manifest");
    std::string ckpt = init_checkpoint(dir);
    auto data = dir / "data";
    fs::create_directories(data);
    write_synth_ppm(data / "a.ppm", 71, 0, 24);

    auto run = [&](const std::string& out) {
        REQUIRE(run_cli({"freq-drop", "--model", ckpt, "--data", data.string(), "--mode", "D",
                         "--gammas", "0:0.25:0.25", "--out", out}) == 0);
    };
    std::string o1 = (dir / "r1.csv").string(), o2 = (dir / "r2.csv").string();
    run(o1);
    run(o2);
    CHECK(read_bytes(o1) == read_bytes(o2));

    auto strip = [](std::vector<std::string> lines) {
        std::vector<std::string> kept;
        for (auto& l : lines)
            if (l.rfind("wall_time_sec=", 0) != 0 && l.rfind("out=", 0) != 0) kept.push_back(l);
        return kept;
    };
    CHECK(strip(read_lines(o1 + ".manifest")) == strip(read_lines(o2 + ".manifest")));
}
