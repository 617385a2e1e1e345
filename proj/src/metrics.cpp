#include "uqimg/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace uqimg {

double mse(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double mse(const Image& a, const Image& b) {
    if (a.height != b.height || a.width != b.width)
        throw std::length_error("mse: image dimensions differ");
    return mse(a.pixels, b.pixels);
}

double ssim(const Image& a, const Image& b, const SsimParams& params) {
    if (a.height != b.height || a.width != b.width)
        throw std::length_error("ssim: image dimensions differ");
    const std::size_t w = params.window;
    if (a.height < w || a.width < w)
        throw std::invalid_argument("ssim: image smaller than the window");

    // Normalized Gaussian window.
    std::vector<double> kernel(w * w);
    const double center = (static_cast<double>(w) - 1.0) / 2.0;
    double total = 0.0;
    for (std::size_t ky = 0; ky < w; ++ky)
        for (std::size_t kx = 0; kx < w; ++kx) {
            double dy = ky - center, dx = kx - center;
            double g = std::exp(-(dy * dy + dx * dx) / (2.0 * params.sigma * params.sigma));
            kernel[ky * w + kx] = g;
            total += g;
        }
    for (auto& g : kernel) g /= total;

    const double c1 = params.k1 * params.dynamic_range * params.k1 * params.dynamic_range;
    const double c2 = params.k2 * params.dynamic_range * params.k2 * params.dynamic_range;

    double acc = 0.0;
    std::size_t positions = 0;
    for (std::size_t y = 0; y + w <= a.height; ++y)
        for (std::size_t x = 0; x + w <= a.width; ++x) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t ky = 0; ky < w; ++ky)
                for (std::size_t kx = 0; kx < w; ++kx) {
                    double g = kernel[ky * w + kx];
                    double va = a.pixels[(y + ky) * a.width + (x + kx)];
                    double vb = b.pixels[(y + ky) * b.width + (x + kx)];
                    ma += g * va;
                    mb += g * vb;
                    saa += g * va * va;
                    sbb += g * vb * vb;
                    sab += g * va * vb;
                }
            double var_a = saa - ma * ma;
            double var_b = sbb - mb * mb;
            double cov = sab - ma * mb;
            double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            double den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
            acc += num / den;
            ++positions;
        }
    return acc / static_cast<double>(positions);
}

double npll(const std::vector<ReconstructionBatch>& batches,
            const std::vector<Image>& truths) {
    if (batches.size() != truths.size())
        throw std::length_error("npll: batch and truth lists differ in length");
    if (batches.empty()) throw std::invalid_argument("npll: empty test set");
    double acc = 0.0;
    for (std::size_t i = 0; i < batches.size(); ++i)
        acc += -predictive_logpdf(batches[i], truths[i].pixels) /
               static_cast<double>(truths[i].pixel_count());
    return acc / static_cast<double>(batches.size());
}

MetricsReport evaluate_metrics(const std::vector<ReconstructionBatch>& batches,
                               const std::vector<Image>& truths,
                               const SsimParams& ssim_params) {
    if (batches.size() != truths.size())
        throw std::length_error("evaluate_metrics: list length mismatch");
    if (batches.empty()) throw std::invalid_argument("evaluate_metrics: empty test set");

    MetricsReport report;
    report.n_test = batches.size();
    for (std::size_t i = 0; i < batches.size(); ++i) {
        const Image& truth = truths[i];
        Image mean_image{truth.height, truth.width, predictive_mean(batches[i])};
        ExampleMetrics row;
        row.example_id = i;
        row.npll = -predictive_logpdf(batches[i], truth.pixels) /
                   static_cast<double>(truth.pixel_count());
        row.mse = mse(mean_image, truth);
        row.ssim = ssim(mean_image, truth, ssim_params);
        report.npll_per_pixel += row.npll;
        report.mse += row.mse;
        report.ssim += row.ssim;
        report.rows.push_back(row);
    }
    report.npll_per_pixel /= static_cast<double>(report.n_test);
    report.mse /= static_cast<double>(report.n_test);
    report.ssim /= static_cast<double>(report.n_test);
    return report;
}

}  // namespace uqimg
