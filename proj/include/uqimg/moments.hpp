#pragma once

#include <cstddef>
#include <utility>

#include "uqimg/tensor.hpp"

namespace uqimg {

enum class VarianceKind { Population, Unbiased };

/// Streaming per-element mean and centered second moment (Welford update,
/// Chan merge). The centered form keeps the running second moment
/// nonnegative, unlike the raw E[x^2] - mean^2 difference, and merge is
/// associative up to floating-point round-off.
class MomentAccumulator {
public:
    MomentAccumulator() = default;
    explicit MomentAccumulator(std::vector<std::size_t> shape)
        : count_(0), mean_(Tensor::zeros(shape)), m2_(Tensor::zeros(std::move(shape))) {}

    std::size_t count() const { return count_; }
    bool initialized() const { return mean_.size() > 0; }
    const Tensor& mean_raw() const { return mean_; }

    void accumulate(const Tensor& sample);
    void merge(const MomentAccumulator& other);

    /// Mean and elementwise variance; variance entries are clamped at zero.
    /// Population requires count >= 1, unbiased requires count >= 2.
    std::pair<Tensor, Tensor> finalize(VarianceKind kind) const;

private:
    std::size_t count_ = 0;
    Tensor mean_;
    Tensor m2_;
};

}  // namespace uqimg
