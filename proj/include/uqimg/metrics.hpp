#pragma once

#include <vector>

#include "uqimg/data.hpp"
#include "uqimg/uq.hpp"

namespace uqimg {

/// Mean squared pixel difference.
double mse(const Tensor& a, const Tensor& b);
double mse(const Image& a, const Image& b);

struct SsimParams {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Mean local structural similarity over valid window positions, Gaussian
/// window. Requires both images to be at least window-sized.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

/// Per-pixel negative predictive log-likelihood over a test set:
///   -(1/N_test) sum_n logpdf(batch_n, x_n) / N.
double npll(const std::vector<ReconstructionBatch>& batches,
            const std::vector<Image>& truths);

struct ExampleMetrics {
    std::size_t example_id = 0;
    double npll = 0.0;
    double mse = 0.0;
    double ssim = 0.0;
};

struct MetricsReport {
    std::size_t n_test = 0;
    double npll_per_pixel = 0.0;
    double mse = 0.0;
    double ssim = 0.0;
    std::vector<ExampleMetrics> rows;
};

/// Per-example rows plus aggregates; the aggregates equal the row means.
/// MSE and SSIM compare the predictive mean against the reference image.
MetricsReport evaluate_metrics(const std::vector<ReconstructionBatch>& batches,
                               const std::vector<Image>& truths,
                               const SsimParams& ssim_params = {});

}  // namespace uqimg
