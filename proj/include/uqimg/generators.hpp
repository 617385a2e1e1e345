#pragma once

#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "uqimg/data.hpp"
#include "uqimg/rng.hpp"
#include "uqimg/tensor.hpp"

namespace uqimg {

/// Standard-normal latent prior of fixed dimension.
struct LatentPrior {
    std::size_t dimension;

    explicit LatentPrior(std::size_t z) : dimension(z) {
        if (z == 0) throw std::invalid_argument("LatentPrior: dimension must be positive");
    }
};

Tensor sample_latent(const LatentPrior& prior, RngStream& stream);

/// Exact per-pixel Gaussian posterior sampler for the masked observation
/// model with an i.i.d. N(mu0, tau2) pixel prior. Acts as the perfectly
/// trained reference generator.
struct AnalyticParams {
    Tensor prior_mean;      // one entry per pixel
    double prior_variance;  // tau^2 > 0
    double noise_variance;  // sigma^2 > 0
};

/// Diagonal posterior factor: mean + std .* z reproduces the posterior.
struct GaussianPosterior {
    Tensor mean;
    Tensor stddev;
};

GaussianPosterior analytic_posterior(const Tensor& prior_mean, double prior_variance,
                                     double noise_variance, const Measurement& m);
GaussianPosterior analytic_posterior(const AnalyticParams& p, const Measurement& m);

/// Conditional-VAE multilayer perceptron. The inference path is the decoder
/// (values || mask || z) -> hidden -> hidden -> output with SiLU hidden
/// activations; the concatenated input is realized as per-block weight
/// matrices. Encoder weights are kept for reproducibility but unused at
/// inference.
struct CvaeMlpParams {
    std::size_t n_pixels = 0;
    std::size_t hidden = 0;
    std::size_t latent = 0;
    double dropout_rate = 0.0;

    Tensor dec_w_values, dec_w_mask, dec_w_latent, dec_b1;
    Tensor dec_w2, dec_b2;
    Tensor dec_w3, dec_b3;

    Tensor enc_w_pixels, enc_w_values, enc_w_mask, enc_b1;
    Tensor enc_w_mean, enc_b_mean;
    Tensor enc_w_logvar, enc_b_logvar;

    // Frozen inverted-dropout masks (one per hidden layer) carried by
    // MC-dropout ensemble members; empty otherwise.
    std::vector<Tensor> dropout_masks;
};

struct GeneratorParams {
    std::variant<AnalyticParams, CvaeMlpParams> value;

    bool is_analytic() const { return std::holds_alternative<AnalyticParams>(value); }
    const AnalyticParams& analytic() const { return std::get<AnalyticParams>(value); }
    AnalyticParams& analytic() { return std::get<AnalyticParams>(value); }
    const CvaeMlpParams& cvae() const { return std::get<CvaeMlpParams>(value); }
    CvaeMlpParams& cvae() { return std::get<CvaeMlpParams>(value); }

    std::size_t latent_dim() const;
    std::size_t output_dim() const;
};

/// G(y, z; theta): one reconstruction for one latent draw. Pure; outputs are
/// raw (clamping to [0,1] happens only at export).
Tensor generate(const GeneratorParams& params, const Measurement& m, const Tensor& z);

/// Decoder pass reusing a precomputed posterior (analytic fast path for the
/// inference double loop, where the measurement is fixed).
Tensor generate_from_posterior(const GaussianPosterior& post, const Tensor& z);

struct TrainingConfig {
    std::size_t epochs = 8;
    std::size_t batch_size = 16;
    double learning_rate = 0.05;
    std::size_t warmup_epochs = 2;  // KL weight ramps linearly 0 -> 1
    std::size_t hidden_width = 64;
    std::size_t latent_dim = 16;
    double dropout_rate = 0.0;
    std::uint64_t seed = 0;

    void validate(std::size_t available_epochs_cap =
                      std::numeric_limits<std::size_t>::max()) const;
};

struct TrainingLog {
    std::vector<double> epoch_mean_loss;
    double min_batch_kl = std::numeric_limits<double>::infinity();
    // Flat parameter snapshots taken once per epoch over the final half of
    // training (SWAG input).
    std::vector<Tensor> snapshots;
};

/// Random initialization of the conditional-VAE parameters, N(0, 1/fan_in)
/// weights and zero biases, deterministic in the stream.
GeneratorParams init_cvae(const TrainingConfig& cfg, std::size_t n_pixels, RngStream& stream);

/// Conditional-VAE training: l1 reconstruction plus KL with linear warm-up,
/// plain SGD with a fixed learning rate. Zero epochs returns the random
/// initialization unchanged.
GeneratorParams train_generator(const TrainingConfig& cfg, const ImageDataset& data,
                                RngStream stream, TrainingLog* log = nullptr);

/// Pack every trainable tensor into one flat vector (fixed field order);
/// unflatten reverses it against a template of identical architecture.
Tensor flatten_params(const GeneratorParams& params);
GeneratorParams unflatten_params(const GeneratorParams& tmpl, const Tensor& flat);

}  // namespace uqimg
