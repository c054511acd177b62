#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace craft {

// Dense float32 tensor, row-major. Images and feature maps use NCHW.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s, float fill = 0.f) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), fill);
    }

    static int64_t numel_of(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t d : s) {
            if (d < 1) throw std::invalid_argument("tensor extent must be >= 1, got " + shape_str(s));
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int64_t dim(int i) const { return shape.at(static_cast<size_t>(i)); }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }

    // 4-D accessors (NCHW).
    float& at(int64_t n, int64_t c, int64_t h, int64_t w) {
        return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    float at(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    // 2-D accessors.
    float& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * shape[1] + c)]; }
    float at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * shape[1] + c)]; }
    // 3-D accessors.
    float& at(int64_t b, int64_t r, int64_t c) {
        return data[static_cast<size_t>((b * shape[1] + r) * shape[2] + c)];
    }
    float at(int64_t b, int64_t r, int64_t c) const {
        return data[static_cast<size_t>((b * shape[1] + r) * shape[2] + c)];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    static std::string shape_str(const std::vector<int64_t>& s) {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
        os << "]";
        return os.str();
    }
    std::string shape_str() const { return shape_str(shape); }

    Tensor reshaped(std::vector<int64_t> s) const {
        if (numel_of(s) != numel())
            throw std::invalid_argument("reshape " + shape_str() + " -> " + shape_str(s) + " changes element count");
        Tensor t;
        t.shape = std::move(s);
        t.data = data;
        return t;
    }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

inline void check_rank(const Tensor& t, int r, const char* op) {
    if (t.rank() != r)
        throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(r) + " tensor, got " +
                                    t.shape_str());
}

inline bool all_finite(const Tensor& t) {
    for (float v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(double(a.data[i]) - double(b.data[i])));
    return m;
}

inline double mean_abs_diff(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mean_abs_diff");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += std::abs(double(a.data[i]) - double(b.data[i]));
    return s / double(a.data.size());
}

}  // namespace craft
