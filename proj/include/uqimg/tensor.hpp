#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace uqimg {

/// Dense row-major tensor of 64-bit reals. Shapes are immutable after
/// construction; data length always equals the product of the shape.
/// The checked constructors reject NaN/Inf so invalid values cannot enter
/// through input boundaries; internal kernels use the unchecked tag.
class Tensor {
public:
    struct Unchecked {};

    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape();
        check_finite();
    }

    Tensor(std::vector<std::size_t> shape, std::vector<double> data, Unchecked)
        : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape();
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        std::size_t n = size_of(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0), Unchecked{});
    }

    static Tensor full(std::vector<std::size_t> shape, double value) {
        std::size_t n = size_of(shape);
        return Tensor(std::move(shape), std::vector<double>(n, value), Unchecked{});
    }

    static Tensor scalar(double value) { return Tensor({1}, {value}); }

    static Tensor vector(std::vector<double> data) {
        std::size_t n = data.size();
        return Tensor({n}, std::move(data));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }

    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at2(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at2(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool is_scalar() const { return data_.size() == 1; }

    void check_finite() const {
        for (double v : data_)
            if (!std::isfinite(v))
                throw std::invalid_argument("Tensor: non-finite entry rejected");
    }

    static std::size_t size_of(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) {
            if (d == 0) throw std::invalid_argument("Tensor: zero dimension");
            n *= d;
        }
        return n;
    }

private:
    void check_shape() const {
        if (size_of(shape_) != data_.size())
            throw std::invalid_argument("Tensor: data length does not match shape (" +
                                        std::to_string(data_.size()) + " entries)");
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw std::length_error(std::string(what) + ": shape mismatch");
}

}  // namespace uqimg
