#include "uqimg/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace uqimg {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
    if (offset + 4 > bytes.size())
        throw std::runtime_error("unexpected end of data");
    return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
           (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::size_t rounded_count(double fraction, std::size_t n) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw std::invalid_argument("mask fraction must lie in (0, 1]");
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

std::size_t Measurement::observed_count() const {
    std::size_t k = 0;
    for (double v : mask.data()) k += v != 0.0 ? 1 : 0;
    return k;
}

ForwardModel::ForwardModel(double fraction, double sigma, MaskMode mode)
    : mask_fraction(fraction), noise_sigma(sigma), mask_mode(mode) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw std::invalid_argument("mask fraction must lie in (0, 1]");
    if (sigma < 0.0) throw std::invalid_argument("noise sigma must be nonnegative");
}

void ImageDataset::validate() const {
    if (!measurements.empty() && measurements.size() != images.size())
        throw std::length_error("ImageDataset: measurement list length mismatch");
    for (std::size_t i = 0; i < measurements.size(); ++i)
        if (measurements[i].values.size() != images[i].pixel_count())
            throw std::length_error("ImageDataset: measurement dimension mismatch");
}

Tensor draw_mask(std::size_t n, double fraction, RngStream& stream) {
    std::size_t k = rounded_count(fraction, n);
    Tensor mask = Tensor::zeros({n});
    for (std::size_t pos : stream.sample_indices(n, k)) mask[pos] = 1.0;
    return mask;
}

Measurement apply_forward(const ForwardModel& model, const Image& image, RngStream& stream) {
    const std::size_t n = image.pixel_count();
    Tensor mask;
    if (model.mask_mode == MaskMode::Fixed) {
        if (!model.fixed_mask || model.fixed_mask->size() != n)
            throw std::invalid_argument("apply_forward: fixed mask missing or wrong length");
        mask = *model.fixed_mask;
    } else {
        mask = draw_mask(n, model.mask_fraction, stream);
    }
    // Noise is drawn full-length then masked, so the counter usage does not
    // depend on the mask pattern.
    Tensor noise = stream.draw_normal({n});
    Tensor values = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i)
        if (mask[i] != 0.0)
            values[i] = image.pixels[i] + model.noise_sigma * noise[i];
    return Measurement{std::move(values), std::move(mask)};
}

Measurement inject_spikes(const Measurement& m, std::size_t spike_count, double amplitude,
                          RngStream& stream) {
    std::vector<std::size_t> observed;
    for (std::size_t i = 0; i < m.mask.size(); ++i)
        if (m.mask[i] != 0.0) observed.push_back(i);
    if (spike_count > observed.size())
        throw std::invalid_argument("inject_spikes: spike count exceeds observed pixel count");

    Measurement out = m;
    std::vector<std::size_t> picks =
        stream.sample_indices(observed.size(), spike_count);
    for (std::size_t p : picks) {
        double sign = stream.next_u64() & 1 ? 1.0 : -1.0;
        out.values[observed[p]] += sign * amplitude;
    }
    return out;
}

ImageDataset parse_idx(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || read_be32(bytes, 0) != kIdxImageMagic)
        throw std::runtime_error("not an IDX image file");
    std::uint32_t count = read_be32(bytes, 4);
    std::uint32_t height = read_be32(bytes, 8);
    std::uint32_t width = read_be32(bytes, 12);
    std::size_t n = static_cast<std::size_t>(height) * width;
    if (bytes.size() < 16 + static_cast<std::size_t>(count) * n)
        throw std::runtime_error("unexpected end of data");

    ImageDataset d;
    d.source_tag = "idx";
    d.images.reserve(count);
    std::size_t offset = 16;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::vector<double> pixels(n);
        for (std::size_t p = 0; p < n; ++p)
            pixels[p] = static_cast<double>(bytes[offset + p]) / 255.0;
        offset += n;
        d.images.push_back(Image{height, width, Tensor({n}, std::move(pixels))});
    }
    return d;
}

std::vector<std::uint8_t> write_idx(const ImageDataset& d) {
    if (d.images.empty()) throw std::invalid_argument("write_idx: empty dataset");
    std::vector<std::uint8_t> out;
    const std::size_t h = d.images.front().height;
    const std::size_t w = d.images.front().width;
    out.reserve(16 + d.images.size() * h * w);
    append_be32(out, kIdxImageMagic);
    append_be32(out, static_cast<std::uint32_t>(d.images.size()));
    append_be32(out, static_cast<std::uint32_t>(h));
    append_be32(out, static_cast<std::uint32_t>(w));
    for (const Image& img : d.images) {
        if (img.height != h || img.width != w)
            throw std::length_error("write_idx: images must share dimensions");
        for (double v : img.pixels.data()) {
            double clamped = std::clamp(v, 0.0, 1.0);
            out.push_back(static_cast<std::uint8_t>(std::lround(clamped * 255.0)));
        }
    }
    return out;
}

ImageDataset make_shapes_dataset(std::size_t count, std::size_t height, std::size_t width,
                                 std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("make_shapes_dataset: count must be >= 1");
    ImageDataset d;
    d.source_tag = "shapes";
    d.images.reserve(count);
    RngStream root(seed, 0x5348u);  // dataset-level stream family
    for (std::size_t i = 0; i < count; ++i) {
        RngStream s = root.sub(i);
        Tensor pixels = Tensor::zeros({height * width});
        std::size_t shapes = 1 + s.next_index(3);
        for (std::size_t k = 0; k < shapes; ++k) {
            double intensity = 0.2 + 0.8 * s.next_uniform();
            bool disc = s.next_u64() & 1;
            if (disc) {
                double cy = s.next_uniform() * height;
                double cx = s.next_uniform() * width;
                double r = 1.5 + s.next_uniform() * (std::min(height, width) / 3.0);
                for (std::size_t y = 0; y < height; ++y)
                    for (std::size_t x = 0; x < width; ++x) {
                        double dy = (y + 0.5) - cy, dx = (x + 0.5) - cx;
                        if (dy * dy + dx * dx <= r * r)
                            pixels[y * width + x] = std::max(pixels[y * width + x], intensity);
                    }
            } else {
                std::size_t rh = 2 + s.next_index(std::max<std::size_t>(1, height / 2));
                std::size_t rw = 2 + s.next_index(std::max<std::size_t>(1, width / 2));
                std::size_t y0 = s.next_index(std::max<std::size_t>(1, height - rh + 1));
                std::size_t x0 = s.next_index(std::max<std::size_t>(1, width - rw + 1));
                for (std::size_t y = y0; y < std::min(height, y0 + rh); ++y)
                    for (std::size_t x = x0; x < std::min(width, x0 + rw); ++x)
                        pixels[y * width + x] = std::max(pixels[y * width + x], intensity);
            }
        }
        d.images.push_back(Image{height, width, std::move(pixels)});
    }
    return d;
}

std::vector<ImageDataset> split_dataset(const ImageDataset& d,
                                        const std::vector<double>& fractions,
                                        std::uint64_t seed, SplitMode mode) {
    if (fractions.empty()) throw std::invalid_argument("split_dataset: no fractions");
    for (double f : fractions)
        if (f <= 0.0 || f > 1.0)
            throw std::invalid_argument("split_dataset: fractions must lie in (0, 1]");
    if (mode == SplitMode::Partition) {
        double total = std::accumulate(fractions.begin(), fractions.end(), 0.0);
        if (std::fabs(total - 1.0) > 1e-9)
            throw std::invalid_argument("split_dataset: partition fractions must sum to 1");
    }

    const std::size_t n = d.size();
    RngStream stream(seed, 0x53504Cu);
    std::vector<std::size_t> order = stream.permutation(n);

    auto take = [&](std::size_t lo, std::size_t hi) {
        ImageDataset part;
        part.source_tag = d.source_tag;
        for (std::size_t i = lo; i < hi; ++i) {
            part.images.push_back(d.images[order[i]]);
            if (d.has_measurements()) part.measurements.push_back(d.measurements[order[i]]);
        }
        return part;
    };

    std::vector<ImageDataset> parts;
    if (mode == SplitMode::Nested) {
        for (double f : fractions) parts.push_back(take(0, rounded_count(f, n)));
    } else {
        double cum = 0.0;
        std::size_t lo = 0;
        for (double f : fractions) {
            cum += f;
            std::size_t hi = static_cast<std::size_t>(std::llround(cum * n));
            parts.push_back(take(lo, hi));
            lo = hi;
        }
    }
    return parts;
}

}  // namespace uqimg
