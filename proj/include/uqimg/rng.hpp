#pragma once

#include <cstdint>

#include "uqimg/tensor.hpp"

namespace uqimg {

/// Counter-based random stream. A value is a pure function of
/// (master seed, stream id, counter), so any draw is reproducible without
/// replaying the sequence, and distinct stream ids are independent by
/// construction. Streams derived through sub() never collide with the
/// parent counter sequence.
class RngStream {
public:
    explicit RngStream(std::uint64_t master_seed, std::uint64_t stream_id = 0,
                       std::uint64_t counter = 0)
        : master_seed_(master_seed), stream_id_(stream_id), counter_(counter) {}

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }

    /// Derive an independent child stream; does not disturb this stream.
    RngStream sub(std::uint64_t key) const;

    /// Next raw 64-bit word; advances the counter by one.
    std::uint64_t next_u64();

    /// Uniform in [0, 1).
    double next_uniform();

    /// Uniform integer in [0, n), n > 0.
    std::uint64_t next_index(std::uint64_t n);

    /// Standard normal via Box-Muller; consumes two counter steps per value.
    double next_normal();

    Tensor draw_normal(std::vector<std::size_t> shape);
    Tensor draw_uniform(std::vector<std::size_t> shape);

    /// First k entries of a Fisher-Yates shuffle of 0..n-1.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

    std::vector<std::size_t> permutation(std::size_t n) { return sample_indices(n, n); }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_;
};

/// rng_draw_normal of the kernel API: i.i.d. N(0,1) entries, deterministic
/// per (seed, stream id, counter), advances the stream.
inline Tensor rng_draw_normal(RngStream& stream, std::vector<std::size_t> shape) {
    return stream.draw_normal(std::move(shape));
}

}  // namespace uqimg
