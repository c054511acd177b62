#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "fft.hpp"
#include "kernels.hpp"
#include "rng.hpp"

namespace craft {

// ---------------------------------------------------------------- raw images

struct ImageU8 {
    int64_t h = 0, w = 0;
    std::vector<uint8_t> data;  // rgb interleaved, row-major

    ImageU8() = default;
    ImageU8(int64_t h_, int64_t w_) : h(h_), w(w_), data(size_t(h_ * w_ * 3), 0) {}
};

// planes <-> interleaved; float side lives in [0,1]
inline Tensor to_float(const ImageU8& img) {
    Tensor t({3, img.h, img.w});
    int64_t hw = img.h * img.w;
    for (int64_t i = 0; i < hw; ++i)
        for (int64_t c = 0; c < 3; ++c) t.data[size_t(c * hw + i)] = float(img.data[size_t(i * 3 + c)]) / 255.0f;
    return t;
}

inline ImageU8 to_u8(const Tensor& t) {
    check_rank(t, 3, "to_u8");
    if (t.dim(0) != 3) throw std::invalid_argument("to_u8: expected 3 channels");
    ImageU8 img(t.dim(1), t.dim(2));
    int64_t hw = img.h * img.w;
    for (int64_t i = 0; i < hw; ++i)
        for (int64_t c = 0; c < 3; ++c) {
            double v = std::nearbyint(double(t.data[size_t(c * hw + i)]) * 255.0);
            img.data[size_t(i * 3 + c)] = uint8_t(std::min(255.0, std::max(0.0, v)));
        }
    return img;
}

// -------------------------------------------------------------------- ppm p6

namespace io_detail {

inline int ppm_token(std::istream& in) {
    // skips whitespace and '#' comments, returns next integer
    for (;;) {
        int c = in.get();
        if (c == EOF) throw std::runtime_error("ppm: truncated header");
        if (std::isspace(c)) continue;
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
            continue;
        }
        int v = 0;
        bool any = false;
        while (c != EOF && std::isdigit(c)) {
            v = v * 10 + (c - '0');
            any = true;
            c = in.get();
        }
        if (!any) throw std::runtime_error("ppm: malformed header");
        return v;
    }
}

}  // namespace io_detail

inline void write_ppm(const std::string& path, const ImageU8& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("ppm: cannot open for write: " + path);
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()), std::streamsize(img.data.size()));
    if (!out) throw std::runtime_error("ppm: write failed: " + path);
}

inline ImageU8 read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("ppm: cannot open: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') throw std::runtime_error("ppm: not a P6 file: " + path);
    int w = io_detail::ppm_token(in);
    int h = io_detail::ppm_token(in);
    int maxval = io_detail::ppm_token(in);
    if (maxval != 255) throw std::runtime_error("ppm: only maxval 255 supported");
    if (w <= 0 || h <= 0) throw std::runtime_error("ppm: bad dimensions");
    ImageU8 img(h, w);
    in.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.data.size()));
    if (in.gcount() != std::streamsize(img.data.size())) throw std::runtime_error("ppm: truncated pixel data");
    return img;
}

// ----------------------------------------------------------------------- png

namespace io_detail {

inline void put_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

inline uint32_t get_be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline void png_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& payload) {
    put_be32(out, uint32_t(payload.size()));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    uint32_t crc = uint32_t(::crc32(0L, out.data() + start, uInt(out.size() - start)));
    put_be32(out, crc);
}

inline uint8_t paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return uint8_t(a);
    if (pb <= pc) return uint8_t(b);
    return uint8_t(c);
}

inline const uint8_t kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

}  // namespace io_detail

inline void write_png(const std::string& path, const ImageU8& img) {
    std::vector<uint8_t> raw;
    raw.reserve(size_t(img.h * (1 + img.w * 3)));
    for (int64_t y = 0; y < img.h; ++y) {
        raw.push_back(0);  // filter: none
        const uint8_t* row = img.data.data() + y * img.w * 3;
        raw.insert(raw.end(), row, row + img.w * 3);
    }
    uLongf bound = ::compressBound(uLong(raw.size()));
    std::vector<uint8_t> zbuf(bound, 0);
    if (::compress2(zbuf.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    zbuf.resize(bound);

    std::vector<uint8_t> out(io_detail::kPngSig, io_detail::kPngSig + 8);
    std::vector<uint8_t> ihdr;
    io_detail::put_be32(ihdr, uint32_t(img.w));
    io_detail::put_be32(ihdr, uint32_t(img.h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter method
    ihdr.push_back(0);  // no interlace
    io_detail::png_chunk(out, "IHDR", ihdr);
    io_detail::png_chunk(out, "IDAT", zbuf);
    io_detail::png_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("png: cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    if (!f) throw std::runtime_error("png: write failed: " + path);
}

inline ImageU8 read_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("png: cannot open: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 8 || std::memcmp(buf.data(), io_detail::kPngSig, 8) != 0)
        throw std::runtime_error("png: bad signature: " + path);

    int64_t w = 0, h = 0;
    bool seen_ihdr = false;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    while (pos + 8 <= buf.size()) {
        uint32_t len = io_detail::get_be32(buf.data() + pos);
        if (pos + 12 + len > buf.size()) throw std::runtime_error("png: truncated chunk");
        std::string type(reinterpret_cast<const char*>(buf.data() + pos + 4), 4);
        const uint8_t* payload = buf.data() + pos + 8;
        if (type == "IHDR") {
            if (len != 13) throw std::runtime_error("png: bad IHDR");
            w = io_detail::get_be32(payload);
            h = io_detail::get_be32(payload + 4);
            if (payload[8] != 8) throw std::runtime_error("png: only 8-bit depth supported");
            if (payload[9] != 2) throw std::runtime_error("png: only truecolor rgb supported");
            if (payload[12] != 0) throw std::runtime_error("png: interlacing not supported");
            seen_ihdr = true;
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr || w <= 0 || h <= 0) throw std::runtime_error("png: missing IHDR");
    if (idat.empty()) throw std::runtime_error("png: missing IDAT");

    int64_t stride = w * 3;
    uLongf raw_len = uLongf(h * (1 + stride));
    std::vector<uint8_t> raw(size_t(raw_len), 0);
    if (::uncompress(raw.data(), &raw_len, idat.data(), uLong(idat.size())) != Z_OK ||
        raw_len != uLongf(h * (1 + stride)))
        throw std::runtime_error("png: inflate failed");

    ImageU8 img(h, w);
    std::vector<uint8_t> prev(size_t(stride), 0);
    for (int64_t y = 0; y < h; ++y) {
        const uint8_t* src = raw.data() + y * (1 + stride);
        uint8_t filter = src[0];
        uint8_t* dst = img.data.data() + y * stride;
        for (int64_t x = 0; x < stride; ++x) {
            int a = x >= 3 ? dst[x - 3] : 0;        // left
            int b = prev[size_t(x)];                // up
            int c = x >= 3 ? prev[size_t(x - 3)] : 0;  // up-left
            int v = src[1 + x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += io_detail::paeth(a, b, c); break;
                default: throw std::runtime_error("png: unknown filter type");
            }
            dst[x] = uint8_t(v);
        }
        std::memcpy(prev.data(), dst, size_t(stride));
    }
    return img;
}

// convenience: pick codec by extension
inline ImageU8 read_image(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".ppm") return read_ppm(path);
    if (ext == ".png") return read_png(path);
    throw std::runtime_error("image: unsupported extension: " + path);
}

inline void write_image(const std::string& path, const ImageU8& img) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".ppm") return write_ppm(path, img);
    if (ext == ".png") return write_png(path, img);
    throw std::runtime_error("image: unsupported extension: " + path);
}

// ---------------------------------------------------------------- checkpoint

struct QuantSiteRecord {
    std::string name;
    uint8_t kind = 0;  // 0 weight, 1 activation
    uint8_t crit = 0;  // 0 feature, 1 frequency
    float l = 0, u = 0;
    uint32_t bits = 8;
};

struct Checkpoint {
    std::map<std::string, std::string> config;
    std::map<std::string, Tensor> tensors;
    std::vector<QuantSiteRecord> sites;
};

namespace io_detail {

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

inline void put_f32(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

inline void put_str(std::vector<uint8_t>& out, const std::string& s) {
    put_u32(out, uint32_t(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

struct Reader {
    const uint8_t* p;
    size_t left;

    void need(size_t n) const {
        if (n > left) throw std::runtime_error("checkpoint: truncated file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
        p += 4;
        left -= 4;
        return v;
    }
    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        left -= n;
        return s;
    }
    uint8_t u8() {
        need(1);
        uint8_t v = *p;
        ++p;
        --left;
        return v;
    }
};

}  // namespace io_detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'C', 'R', 'F', 'T'});
    io_detail::put_u32(out, 1);  // format version
    io_detail::put_u32(out, uint32_t(ck.config.size()));
    for (const auto& [k, v] : ck.config) {
        io_detail::put_str(out, k);
        io_detail::put_str(out, v);
    }
    io_detail::put_u32(out, uint32_t(ck.tensors.size()));
    for (const auto& [name, t] : ck.tensors) {
        io_detail::put_str(out, name);
        io_detail::put_u32(out, uint32_t(t.rank()));
        for (auto d : t.shape) io_detail::put_u32(out, uint32_t(d));
        size_t bytes = t.data.size() * 4;
        size_t start = out.size();
        out.resize(start + bytes);
        std::memcpy(out.data() + start, t.data.data(), bytes);  // little-endian f32 payload
    }
    io_detail::put_u32(out, uint32_t(ck.sites.size()));
    for (const auto& s : ck.sites) {
        io_detail::put_str(out, s.name);
        out.push_back(s.kind);
        out.push_back(s.crit);
        io_detail::put_f32(out, s.l);
        io_detail::put_f32(out, s.u);
        io_detail::put_u32(out, s.bits);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    io_detail::Reader r{buf.data(), buf.size()};
    r.need(4);
    if (std::memcmp(r.p, "CRFT", 4) != 0) throw std::runtime_error("checkpoint: bad magic");
    r.p += 4;
    r.left -= 4;
    uint32_t version = r.u32();
    if (version != 1) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint ck;
    uint32_t ncfg = r.u32();
    for (uint32_t i = 0; i < ncfg; ++i) {
        std::string k = r.str();
        std::string v = r.str();
        if (!ck.config.emplace(k, v).second) throw std::runtime_error("checkpoint: duplicate config key " + k);
    }
    uint32_t nt = r.u32();
    for (uint32_t i = 0; i < nt; ++i) {
        std::string name = r.str();
        uint32_t rank = r.u32();
        if (rank == 0 || rank > 8) throw std::runtime_error("checkpoint: bad tensor rank for " + name);
        std::vector<int64_t> shape;
        for (uint32_t d = 0; d < rank; ++d) shape.push_back(int64_t(r.u32()));
        Tensor t(shape);
        size_t bytes = t.data.size() * 4;
        r.need(bytes);
        std::memcpy(t.data.data(), r.p, bytes);
        r.p += bytes;
        r.left -= bytes;
        if (!ck.tensors.emplace(name, std::move(t)).second)
            throw std::runtime_error("checkpoint: duplicate tensor " + name);
    }
    uint32_t ns = r.u32();
    for (uint32_t i = 0; i < ns; ++i) {
        QuantSiteRecord s;
        s.name = r.str();
        s.kind = r.u8();
        s.crit = r.u8();
        s.l = r.f32();
        s.u = r.f32();
        s.bits = r.u32();
        ck.sites.push_back(std::move(s));
    }
    if (r.left != 0) throw std::runtime_error("checkpoint: trailing bytes");
    return ck;
}

// --------------------------------------------------------- synthetic dataset

namespace synth_detail {

inline void normalize01(Tensor& t) {
    float lo = t.data[0], hi = t.data[0];
    for (float v : t.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    float span = hi - lo < 1e-6f ? 1.0f : hi - lo;
    for (auto& v : t.data) v = (v - lo) / span;
}

inline Tensor checkerboard(RngStream& rng, int64_t h, int64_t w) {
    Tensor t({3, h, w});
    int64_t cell = rng.uniform_int(2, 8);
    int64_t oy = rng.uniform_int(0, cell - 1), ox = rng.uniform_int(0, cell - 1);
    float ca[3], cb[3];
    for (int c = 0; c < 3; ++c) {
        ca[c] = float(rng.uniform(0.0, 1.0));
        cb[c] = float(rng.uniform(0.0, 1.0));
    }
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                bool odd = (((y + oy) / cell) + ((x + ox) / cell)) % 2 != 0;
                t.at(c, y, x) = odd ? ca[c] : cb[c];
            }
    return t;
}

inline Tensor grating(RngStream& rng, int64_t h, int64_t w) {
    Tensor t({3, h, w});
    double fy = rng.uniform(0.02, 0.25), fx = rng.uniform(0.02, 0.25);
    if (rng.uniform(0.0, 1.0) < 0.5) fy = -fy;
    double phase = rng.uniform(0.0, 6.283185307179586);
    float base[3], amp[3];
    for (int c = 0; c < 3; ++c) {
        base[c] = float(rng.uniform(0.3, 0.7));
        amp[c] = float(rng.uniform(0.1, 0.3));
    }
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                double s = std::sin(6.283185307179586 * (fy * double(y) + fx * double(x)) + phase);
                t.at(c, y, x) = base[c] + amp[c] * float(s);
            }
    return t;
}

inline Tensor blobs(RngStream& rng, int64_t h, int64_t w) {
    Tensor t({3, h, w}, 0.f);
    int k = int(rng.uniform_int(3, 8));
    for (int i = 0; i < k; ++i) {
        double cy = rng.uniform(0.0, double(h));
        double cx = rng.uniform(0.0, double(w));
        double sig = rng.uniform(double(std::min(h, w)) * 0.05, double(std::min(h, w)) * 0.25);
        float col[3];
        for (int c = 0; c < 3; ++c) col[c] = float(rng.uniform(0.2, 1.0));
        for (int64_t c = 0; c < 3; ++c)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t x = 0; x < w; ++x) {
                    double d2 = (double(y) - cy) * (double(y) - cy) + (double(x) - cx) * (double(x) - cx);
                    t.at(c, y, x) += col[c] * float(std::exp(-d2 / (2 * sig * sig)));
                }
    }
    normalize01(t);
    return t;
}

inline Tensor voronoi(RngStream& rng, int64_t h, int64_t w) {
    Tensor t({3, h, w});
    int k = int(rng.uniform_int(4, 12));
    std::vector<double> cy(size_t(k), 0.0), cx(size_t(k), 0.0);
    std::vector<float> col(size_t(k * 3), 0.f);
    for (int i = 0; i < k; ++i) {
        cy[size_t(i)] = rng.uniform(0.0, double(h));
        cx[size_t(i)] = rng.uniform(0.0, double(w));
        for (int c = 0; c < 3; ++c) col[size_t(i * 3 + c)] = float(rng.uniform(0.0, 1.0));
    }
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            int best = 0;
            double bd = 1e30;
            for (int i = 0; i < k; ++i) {
                double d = (double(y) - cy[size_t(i)]) * (double(y) - cy[size_t(i)]) +
                           (double(x) - cx[size_t(i)]) * (double(x) - cx[size_t(i)]);
                if (d < bd) {
                    bd = d;
                    best = i;
                }
            }
            for (int64_t c = 0; c < 3; ++c) t.at(c, y, x) = col[size_t(best * 3 + int(c))];
        }
    return t;
}

inline Tensor filtered_noise(RngStream& rng, int64_t h, int64_t w) {
    Tensor t({3, h, w});
    double cutoff = rng.uniform(0.08, 0.45);  // fraction of nyquist radius
    for (int64_t c = 0; c < 3; ++c) {
        Tensor plane({h, w});
        for (auto& v : plane.data) v = float(rng.uniform(-1.0, 1.0));
        ComplexGrid f = fft2(plane);
        double ry = cutoff * double(h) / 2.0, rx = cutoff * double(w) / 2.0;
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                // signed frequency coordinates before any shift
                double sy = y <= h / 2 ? double(y) : double(y - h);
                double sx = x <= w / 2 ? double(x) : double(x - w);
                double d = (sy / std::max(ry, 1e-9)) * (sy / std::max(ry, 1e-9)) +
                           (sx / std::max(rx, 1e-9)) * (sx / std::max(rx, 1e-9));
                if (d > 1.0) {
                    f.re[size_t(f.idx(y, x))] = 0;
                    f.im[size_t(f.idx(y, x))] = 0;
                }
            }
        Tensor back = real_part(ifft2(f));
        for (int64_t i = 0; i < h * w; ++i) t.data[size_t(c * h * w + i)] = back.data[size_t(i)];
    }
    normalize01(t);
    return t;
}

}  // namespace synth_detail

enum class SynthKind { checkerboard = 0, grating, blobs, voronoi, filtered_noise };

inline SynthKind synth_kind_for(uint64_t seed, int64_t index) {
    RngStream pick(seed, "synth.kind." + std::to_string(index));
    double r = pick.uniform(0.0, 1.0);
    if (r < 0.15) return SynthKind::checkerboard;
    if (r < 0.35) return SynthKind::grating;
    if (r < 0.55) return SynthKind::blobs;
    if (r < 0.80) return SynthKind::voronoi;
    return SynthKind::filtered_noise;
}

// Deterministic image `index` of an unbounded synthetic dataset. Every image
// draws from its own substream, so indices can be generated in any order.
inline Tensor synth_image(uint64_t seed, int64_t index, int64_t h, int64_t w) {
    SynthKind kind = synth_kind_for(seed, index);
    RngStream rng(seed, "synth.img." + std::to_string(index));
    switch (kind) {
        case SynthKind::checkerboard: return synth_detail::checkerboard(rng, h, w);
        case SynthKind::grating: return synth_detail::grating(rng, h, w);
        case SynthKind::blobs: return synth_detail::blobs(rng, h, w);
        case SynthKind::voronoi: return synth_detail::voronoi(rng, h, w);
        case SynthKind::filtered_noise: return synth_detail::filtered_noise(rng, h, w);
    }
    throw std::logic_error("synth_image: unreachable");
}

// ------------------------------------------------------------- degradation

struct DegradedPair {
    Tensor hr;  // cropped to a multiple of scale
    Tensor lr;  // bicubic downsample of hr
};

inline DegradedPair degrade(const Tensor& hr, int64_t scale) {
    check_rank(hr, 3, "degrade");
    if (scale < 1) throw std::invalid_argument("degrade: scale must be >= 1");
    int64_t h = hr.dim(1) - hr.dim(1) % scale;
    int64_t w = hr.dim(2) - hr.dim(2) % scale;
    if (h == 0 || w == 0) throw std::invalid_argument("degrade: image smaller than scale");
    DegradedPair out;
    out.hr = Tensor({hr.dim(0), h, w});
    for (int64_t c = 0; c < hr.dim(0); ++c)
        for (int64_t y = 0; y < h; ++y)
            std::memcpy(&out.hr.at(c, y, int64_t(0)), &hr.data[size_t((c * hr.dim(1) + y) * hr.dim(2))],
                        size_t(w) * 4);
    Tensor batched = out.hr.reshaped({1, hr.dim(0), h, w});
    out.lr = ops::bicubic_resize(batched, h / scale, w / scale).reshaped({hr.dim(0), h / scale, w / scale});
    return out;
}

// Round-robin calibration picks: deterministic, order-preserving, wraps when
// more samples are requested than the set holds.
inline std::vector<int64_t> sample_calibration(int64_t set_size, int64_t count) {
    if (set_size <= 0 || count < 0) throw std::invalid_argument("sample_calibration: bad sizes");
    std::vector<int64_t> out;
    out.reserve(size_t(count));
    for (int64_t i = 0; i < count; ++i) out.push_back(i % set_size);
    return out;
}

}  // namespace craft
