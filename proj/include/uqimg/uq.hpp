#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uqimg/ensemble.hpp"
#include "uqimg/generators.hpp"

namespace uqimg {

struct InferenceConfig {
    std::size_t t1 = 128;   // latent draws per member
    double eps2 = 1e-5;     // conditional-distribution variance
    std::uint64_t seed = 0;
    bool dense_covariance = false;  // full matrices, tiny images only

    void validate(std::size_t n_pixels) const;
};

struct BatchProvenance {
    std::uint64_t ensemble_hash = 0;
    std::uint64_t measurement_hash = 0;
    std::uint64_t seed = 0;
};

/// The T1 x T2 grid of generator outputs from the inference double loop.
/// Latent draw t1 is shared across all members; sample(t1, t2) is
/// G(y, z_t1; theta_t2). Member means are the t1-averages per member.
class ReconstructionBatch {
public:
    ReconstructionBatch(std::vector<Tensor> samples, std::size_t t1, std::size_t t2,
                        double eps2, BatchProvenance provenance);

    std::size_t t1() const { return t1_; }
    std::size_t t2() const { return t2_; }
    std::size_t pixel_count() const { return n_; }
    double eps2() const { return eps2_; }
    const BatchProvenance& provenance() const { return provenance_; }

    const Tensor& sample(std::size_t i1, std::size_t i2) const {
        return samples_[i1 * t2_ + i2];
    }
    const std::vector<Tensor>& samples() const { return samples_; }
    const Tensor& member_mean(std::size_t i2) const { return member_means_[i2]; }

    /// Single-member sub-batch (T2 = 1), used for per-member metrics.
    ReconstructionBatch member_batch(std::size_t i2) const;

private:
    std::size_t t1_, t2_, n_;
    double eps2_;
    std::vector<Tensor> samples_;
    std::vector<Tensor> member_means_;
    BatchProvenance provenance_;
};

/// Per-pixel uncertainty decomposition. The predictive variance is
/// eps2 plus the population variance over all T1*T2 samples, the epistemic
/// variance is the population variance over the T2 member means, and the
/// aleatoric variance is their difference clamped at zero (with a -1e-10
/// residual tripwire). Dense N x N matrices are attached only on request.
struct UncertaintyMaps {
    Tensor mean;
    Tensor var_predictive;
    Tensor var_epistemic;
    Tensor var_aleatoric;
    std::optional<Tensor> dense_predictive;
    std::optional<Tensor> dense_epistemic;
    std::optional<Tensor> dense_aleatoric;
};

std::uint64_t measurement_hash(const Measurement& m);
std::uint64_t ensemble_hash(const Ensemble& ens);

/// Inference double loop over latent draws and ensemble members.
ReconstructionBatch infer(const Ensemble& ens, const Measurement& m,
                          const InferenceConfig& cfg);

Tensor predictive_mean(const ReconstructionBatch& b);

UncertaintyMaps uncertainty_maps(const ReconstructionBatch& b, bool dense = false);

/// Log of the uniform Gaussian mixture density at x, evaluated through
/// logsumexp:
///   -log(T1 T2) - (N/2) log(2 pi eps2) + logsumexp_t(-|x - mu_t|^2 / (2 eps2)).
double predictive_logpdf(const ReconstructionBatch& b, const Tensor& x);

struct SingleModelRelationReport {
    double max_relative_deviation = 0.0;
    std::size_t t1 = 0;
};

/// With T2 = 1, verifies var_pred - eps2 = ((T1-1)/T1) * unbiased sample
/// variance, the exact finite-T1 bridge between the single-model sample
/// covariance and the predictive covariance.
SingleModelRelationReport single_model_relation_check(const ReconstructionBatch& b);

/// Draw from the mixture: uniform component plus eps * N(0, I).
Tensor sample_predictive(const ReconstructionBatch& b, RngStream& stream);

}  // namespace uqimg
