#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "npp/error.hpp"

namespace npp {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// Dense row-major tensor of doubles. Plain value type: copy freely, never
// shared-mutable. All internal computation is 64-bit.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

    Tensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (shape_numel(shape_) != data_.size()) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
        }
    }

    const Shape& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // (row, col) into a rank-2 tensor.
    double& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    // (ch, row, col) into a rank-3 tensor.
    double& at3(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    double at3(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    Tensor reshaped(Shape shape) const {
        if (shape_numel(shape) != data_.size()) {
            throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
        }
        return Tensor(std::move(shape), data_);
    }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    double sum() const {
        double s = 0.0;
        for (double v : data_) s += v;
        return s;
    }

    double abs_sum() const {
        double s = 0.0;
        for (double v : data_) s += std::fabs(v);
        return s;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::fabs(v));
        return m;
    }

    bool same_bits(const Tensor& other) const {
        if (shape_ != other.shape_) return false;
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (data_[i] != other.data_[i]) return false;
            // distinguish +0/-0 so "bitwise" really means bitwise
            if (std::signbit(data_[i]) != std::signbit(other.data_[i])) return false;
        }
        return true;
    }

private:
    Shape shape_;
    std::vector<double> data_;
};

inline void require_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw Error(what + ": non-finite values");
}

} // namespace npp
