#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace etvd {

struct Shape {
    int n = 0;  // batch
    int c = 0;  // channels
    int h = 0;  // rows
    int w = 0;  // cols

    int64_t count() const {
        return static_cast<int64_t>(n) * c * h * w;
    }
    bool operator==(const Shape&) const = default;
    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

// Rank-4 array (batch, channel, row, col), contiguous row-major. This is the
// carrier for images, feature maps and gradients throughout the engine.
// Instantiated with float (training default) or double (gradient checks).
template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape s) : shape_(s) {
        if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
            throw std::invalid_argument("Tensor: negative dimension " + s.str());
        data_.assign(static_cast<size_t>(s.count()), T(0));
    }
    Tensor(int n, int c, int h, int w) : Tensor(Shape{n, c, h, w}) {}

    static Tensor full(Shape s, T value) {
        Tensor t(s);
        t.fill(value);
        return t;
    }

    const Shape& shape() const { return shape_; }
    int n() const { return shape_.n; }
    int c() const { return shape_.c; }
    int h() const { return shape_.h; }
    int w() const { return shape_.w; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
    const T& at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    // Pointer to the (h*w) plane of one (sample, channel) pair.
    T* plane(int n, int c) { return data_.data() + plane_offset(n, c); }
    const T* plane(int n, int c) const { return data_.data() + plane_offset(n, c); }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    // Copy of one sample as a batch-of-one tensor.
    Tensor sample(int i) const {
        Tensor out(1, shape_.c, shape_.h, shape_.w);
        const T* src = data_.data() + static_cast<size_t>(i) * shape_.c * shape_.h * shape_.w;
        std::copy(src, src + out.size(), out.data());
        return out;
    }

    bool operator==(const Tensor&) const = default;

private:
    size_t index(int n, int c, int y, int x) const {
        return ((static_cast<size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
    }
    size_t plane_offset(int n, int c) const {
        return (static_cast<size_t>(n) * shape_.c + c) * static_cast<size_t>(shape_.h) * shape_.w;
    }

    Shape shape_{};
    std::vector<T> data_;
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (size_t i = 0; i < t.size(); ++i)
        if (!std::isfinite(static_cast<double>(t[i]))) return false;
    return true;
}

// Public operations must not hand back NaN/Inf; callers treat a violation as
// a checked numerical failure, not undefined behavior.
template <typename T>
void ensure_finite(const Tensor<T>& t, const char* context) {
    if (!all_finite(t))
        throw std::runtime_error(std::string("non-finite values in ") + context);
}

// Filter bank for one convolutional layer: weights (c_out, c_in, kh, kw) plus
// a per-output-channel bias.
template <typename T>
struct Filter {
    Tensor<T> weights;
    std::vector<T> bias;

    Filter() = default;
    Filter(int c_out, int c_in, int k)
        : weights(c_out, c_in, k, k), bias(static_cast<size_t>(c_out), T(0)) {}

    int c_out() const { return weights.n(); }
    int c_in() const { return weights.c(); }
    int kh() const { return weights.h(); }
    int kw() const { return weights.w(); }
};

template <typename T>
void ensure_finite(const Filter<T>& f, const char* context) {
    ensure_finite(f.weights, context);
    for (T b : f.bias)
        if (!std::isfinite(static_cast<double>(b)))
            throw std::runtime_error(std::string("non-finite bias in ") + context);
}

}  // namespace etvd
