#include "uqimg/moments.hpp"

#include <stdexcept>

namespace uqimg {

void MomentAccumulator::accumulate(const Tensor& sample) {
    if (!initialized()) {
        mean_ = Tensor::zeros(sample.shape());
        m2_ = Tensor::zeros(sample.shape());
    }
    require_same_shape(mean_, sample, "MomentAccumulator::accumulate");
    ++count_;
    const double inv_n = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < mean_.size(); ++i) {
        double delta = sample[i] - mean_[i];
        mean_[i] += delta * inv_n;
        m2_[i] += delta * (sample[i] - mean_[i]);
    }
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    require_same_shape(mean_, other.mean_, "MomentAccumulator::merge");
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    for (std::size_t i = 0; i < mean_.size(); ++i) {
        double delta = other.mean_[i] - mean_[i];
        mean_[i] += delta * (nb / n);
        m2_[i] += other.m2_[i] + delta * delta * (na * nb / n);
    }
    count_ += other.count_;
}

std::pair<Tensor, Tensor> MomentAccumulator::finalize(VarianceKind kind) const {
    const std::size_t need = kind == VarianceKind::Unbiased ? 2 : 1;
    if (count_ < need)
        throw std::invalid_argument("MomentAccumulator::finalize: insufficient count");
    const double divisor =
        kind == VarianceKind::Unbiased ? static_cast<double>(count_ - 1)
                                       : static_cast<double>(count_);
    Tensor variance = Tensor::zeros(mean_.shape());
    for (std::size_t i = 0; i < m2_.size(); ++i) {
        double v = m2_[i] / divisor;
        variance[i] = v < 0.0 ? 0.0 : v;
    }
    return {mean_, variance};
}

}  // namespace uqimg
