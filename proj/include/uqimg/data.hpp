#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uqimg/rng.hpp"
#include "uqimg/tensor.hpp"

namespace uqimg {

/// Normalized grayscale image, pixels flattened row-major into [0,1].
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    Tensor pixels;

    std::size_t pixel_count() const { return height * width; }
};

/// Inpainting observation: full-length value vector with explicit zeros at
/// unobserved positions, paired with the binary mask that produced it.
struct Measurement {
    Tensor values;
    Tensor mask;

    std::size_t observed_count() const;
};

enum class MaskMode { PerExampleRandom, Fixed };

/// Masking operator plus additive white Gaussian noise on observed pixels.
/// The observed-pixel count is always round(mask_fraction * N).
struct ForwardModel {
    double mask_fraction = 0.1;
    double noise_sigma = 0.05;
    MaskMode mask_mode = MaskMode::PerExampleRandom;
    std::optional<Tensor> fixed_mask;

    ForwardModel() = default;
    ForwardModel(double fraction, double sigma, MaskMode mode = MaskMode::PerExampleRandom);
};

struct ImageDataset {
    std::vector<Image> images;
    std::vector<Measurement> measurements;  // empty or parallel to images
    std::string source_tag;

    std::size_t size() const { return images.size(); }
    bool has_measurements() const { return !measurements.empty(); }
    void validate() const;
};

/// Draw a binary mask with exactly round(fraction * n) ones.
Tensor draw_mask(std::size_t n, double fraction, RngStream& stream);

/// y = mask .* pixels + mask .* N(0, sigma^2); unobserved entries stay 0.
Measurement apply_forward(const ForwardModel& model, const Image& image, RngStream& stream);

/// Add +-amplitude at spike_count distinct observed positions (mask intact).
Measurement inject_spikes(const Measurement& m, std::size_t spike_count, double amplitude,
                          RngStream& stream);

/// Parse the IDX image container (big-endian magic 0x00000803, dims, uint8
/// pixels mapped onto [0,1] by division by 255).
ImageDataset parse_idx(const std::vector<std::uint8_t>& bytes);

/// Serialize back to IDX; pixels are rounded to the nearest uint8 step.
std::vector<std::uint8_t> write_idx(const ImageDataset& d);

/// Synthetic reference images: random rectangles and discs with intensities
/// in [0.2, 1.0] on a zero background. Deterministic in seed.
ImageDataset make_shapes_dataset(std::size_t count, std::size_t height, std::size_t width,
                                 std::uint64_t seed);

enum class SplitMode { Nested, Partition };

/// Nested mode: each fraction selects a prefix of one shuffled order, so
/// smaller splits are subsets of larger ones. Partition mode: fractions sum
/// to one and produce disjoint covering chunks.
std::vector<ImageDataset> split_dataset(const ImageDataset& d,
                                        const std::vector<double>& fractions,
                                        std::uint64_t seed, SplitMode mode);

}  // namespace uqimg
