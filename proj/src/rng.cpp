#include "uqimg/rng.hpp"

#include <cmath>

namespace uqimg {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer: a bijective avalanche mix.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

// Per-stream base so the counter walk is a SplitMix64 sequence whose start
// depends on (seed, stream) through two full mixing rounds.
inline std::uint64_t stream_base(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed + kGolden) ^ (stream * kGolden + 1));
}

}  // namespace

RngStream RngStream::sub(std::uint64_t key) const {
    return RngStream(master_seed_, mix64(stream_id_ * kGolden + key + 1));
}

std::uint64_t RngStream::next_u64() {
    std::uint64_t base = stream_base(master_seed_, stream_id_);
    std::uint64_t word = mix64(base + (counter_ + 1) * kGolden);
    ++counter_;
    return word;
}

double RngStream::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_index(std::uint64_t n) {
    return next_u64() % n;
}

double RngStream::next_normal() {
    // (u64 >> 11) + 1 keeps u1 strictly positive for the log.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Tensor RngStream::draw_normal(std::vector<std::size_t> shape) {
    std::size_t n = Tensor::size_of(shape);
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = next_normal();
    return Tensor(std::move(shape), std::move(data), Tensor::Unchecked{});
}

Tensor RngStream::draw_uniform(std::vector<std::size_t> shape) {
    std::size_t n = Tensor::size_of(shape);
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = next_uniform();
    return Tensor(std::move(shape), std::move(data), Tensor::Unchecked{});
}

std::vector<std::size_t> RngStream::sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        std::size_t j = i + next_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace uqimg
