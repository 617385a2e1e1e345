#include "uqimg/uq.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "uqimg/errors.hpp"
#include "uqimg/hash.hpp"
#include "uqimg/moments.hpp"
#include "uqimg/numerics.hpp"

namespace uqimg {

namespace {

constexpr std::uint64_t kInferStreamId = 0x494E46;  // inference stream family

double rel_gap(double a, double b) {
    double scale = std::max(std::fabs(a), std::fabs(b));
    return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

// Centered outer-product average: (1/count) sum (v_i - center)(v_i - center)^T.
Tensor centered_outer_average(const std::vector<const Tensor*>& vs, const Tensor& center) {
    const std::size_t n = center.size();
    Tensor out = Tensor::zeros({n, n});
    for (const Tensor* v : vs)
        for (std::size_t i = 0; i < n; ++i) {
            double di = (*v)[i] - center[i];
            if (di == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j)
                out.at2(i, j) += di * ((*v)[j] - center[j]);
        }
    const double inv = 1.0 / static_cast<double>(vs.size());
    for (auto& e : out.data()) e *= inv;
    return out;
}

}  // namespace

void InferenceConfig::validate(std::size_t n_pixels) const {
    if (t1 < 1) throw std::invalid_argument("InferenceConfig: T1 must be >= 1");
    if (eps2 <= 0.0) throw std::invalid_argument("InferenceConfig: eps2 must be positive");
    if (dense_covariance && n_pixels > 64)
        throw std::invalid_argument(
            "InferenceConfig: dense covariance allowed only for N <= 64");
}

std::uint64_t measurement_hash(const Measurement& m) {
    Fnv1a64 h;
    h.update(m.values.data());
    h.update(m.mask.data());
    return h.digest();
}

std::uint64_t ensemble_hash(const Ensemble& ens) {
    Fnv1a64 h;
    h.update(to_string(ens.strategy));
    for (const GeneratorParams& member : ens.members) {
        h.update(flatten_params(member).data());
        if (!member.is_analytic())
            for (const Tensor& mask : member.cvae().dropout_masks) h.update(mask.data());
    }
    return h.digest();
}

ReconstructionBatch::ReconstructionBatch(std::vector<Tensor> samples, std::size_t t1,
                                         std::size_t t2, double eps2,
                                         BatchProvenance provenance)
    : t1_(t1), t2_(t2), eps2_(eps2), samples_(std::move(samples)),
      provenance_(provenance) {
    if (t1_ < 1 || t2_ < 1 || samples_.size() != t1_ * t2_)
        throw std::invalid_argument("ReconstructionBatch: grid not fully populated");
    if (eps2_ <= 0.0) throw std::invalid_argument("ReconstructionBatch: eps2 must be positive");
    n_ = samples_.front().size();
    for (const Tensor& s : samples_)
        if (s.size() != n_)
            throw std::length_error("ReconstructionBatch: sample dimension mismatch");

    member_means_.reserve(t2_);
    for (std::size_t i2 = 0; i2 < t2_; ++i2) {
        MomentAccumulator acc;
        for (std::size_t i1 = 0; i1 < t1_; ++i1) acc.accumulate(sample(i1, i2));
        member_means_.push_back(acc.finalize(VarianceKind::Population).first);
    }
}

ReconstructionBatch ReconstructionBatch::member_batch(std::size_t i2) const {
    std::vector<Tensor> sub;
    sub.reserve(t1_);
    for (std::size_t i1 = 0; i1 < t1_; ++i1) sub.push_back(sample(i1, i2));
    return ReconstructionBatch(std::move(sub), t1_, 1, eps2_, provenance_);
}

ReconstructionBatch infer(const Ensemble& ens, const Measurement& m,
                          const InferenceConfig& cfg) {
    ens.validate();
    const std::size_t n = m.values.size();
    cfg.validate(n);
    for (const GeneratorParams& member : ens.members)
        if (member.output_dim() != n)
            throw std::length_error("infer: measurement dimension mismatch");

    const std::size_t t2 = ens.size();
    LatentPrior prior(ens.members.front().latent_dim());

    // Analytic members factor per measurement; computing the posterior once
    // per member keeps the double loop linear in N.
    std::vector<GaussianPosterior> posteriors;
    if (ens.members.front().is_analytic())
        for (const GeneratorParams& member : ens.members)
            posteriors.push_back(analytic_posterior(member.analytic(), m));

    RngStream stream(cfg.seed, kInferStreamId);
    std::vector<Tensor> samples;
    samples.reserve(cfg.t1 * t2);
    for (std::size_t i1 = 0; i1 < cfg.t1; ++i1) {
        Tensor z = sample_latent(prior, stream);
        for (std::size_t i2 = 0; i2 < t2; ++i2) {
            if (!posteriors.empty())
                samples.push_back(generate_from_posterior(posteriors[i2], z));
            else
                samples.push_back(generate(ens.members[i2], m, z));
        }
    }

    BatchProvenance prov{ensemble_hash(ens), measurement_hash(m), cfg.seed};
    return ReconstructionBatch(std::move(samples), cfg.t1, t2, cfg.eps2, prov);
}

Tensor predictive_mean(const ReconstructionBatch& b) {
    MomentAccumulator acc;
    for (const Tensor& s : b.samples()) acc.accumulate(s);
    return acc.finalize(VarianceKind::Population).first;
}

UncertaintyMaps uncertainty_maps(const ReconstructionBatch& b, bool dense) {
    const std::size_t n = b.pixel_count();
    if (dense && n > 64)
        throw std::invalid_argument("uncertainty_maps: dense mode allowed only for N <= 64");

    MomentAccumulator all;
    for (const Tensor& s : b.samples()) all.accumulate(s);
    auto [mean, var_all] = all.finalize(VarianceKind::Population);

    MomentAccumulator members;
    for (std::size_t i2 = 0; i2 < b.t2(); ++i2) members.accumulate(b.member_mean(i2));
    Tensor var_epis = members.finalize(VarianceKind::Population).second;

    UncertaintyMaps maps;
    maps.mean = mean;
    maps.var_predictive = var_all;
    for (auto& v : maps.var_predictive.data()) v += b.eps2();
    maps.var_epistemic = var_epis;
    maps.var_aleatoric = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) {
        double residual = maps.var_predictive[i] - maps.var_epistemic[i];
        if (residual < -1e-10) {
            char msg[128];
            std::snprintf(msg, sizeof(msg),
                          "uncertainty_maps: decomposition residual %.3e below floor",
                          residual);
            throw NumericError(msg);
        }
        maps.var_aleatoric[i] = residual < 0.0 ? 0.0 : residual;
        if (maps.var_predictive[i] < b.eps2() - 1e-12)
            throw NumericError("uncertainty_maps: predictive variance fell below eps2");
        if (rel_gap(maps.var_predictive[i],
                    maps.var_epistemic[i] + maps.var_aleatoric[i]) > 1e-12)
            throw NumericError("uncertainty_maps: decomposition identity violated");
    }

    if (dense) {
        std::vector<const Tensor*> all_samples;
        for (const Tensor& s : b.samples()) all_samples.push_back(&s);
        Tensor pred = centered_outer_average(all_samples, mean);
        for (std::size_t i = 0; i < n; ++i) pred.at2(i, i) += b.eps2();

        std::vector<const Tensor*> mm;
        for (std::size_t i2 = 0; i2 < b.t2(); ++i2) mm.push_back(&b.member_mean(i2));
        Tensor epis = centered_outer_average(mm, mean);

        Tensor alea = pred;
        for (std::size_t i = 0; i < alea.size(); ++i) alea[i] -= epis[i];
        maps.dense_predictive = std::move(pred);
        maps.dense_epistemic = std::move(epis);
        maps.dense_aleatoric = std::move(alea);
    }
    return maps;
}

double predictive_logpdf(const ReconstructionBatch& b, const Tensor& x) {
    if (x.size() != b.pixel_count())
        throw std::length_error("predictive_logpdf: dimension mismatch");
    const double inv_two_eps2 = 1.0 / (2.0 * b.eps2());
    std::vector<double> exponents;
    exponents.reserve(b.samples().size());
    for (const Tensor& mu : b.samples()) {
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double d = x[i] - mu[i];
            q += d * d;
        }
        exponents.push_back(-q * inv_two_eps2);
    }
    const double n = static_cast<double>(b.pixel_count());
    const double count = static_cast<double>(b.samples().size());
    return -std::log(count) - 0.5 * n * std::log(2.0 * M_PI * b.eps2()) +
           logsumexp(exponents);
}

SingleModelRelationReport single_model_relation_check(const ReconstructionBatch& b) {
    if (b.t2() != 1)
        throw std::invalid_argument("single_model_relation_check: requires T2 = 1");
    if (b.t1() < 2)
        throw std::invalid_argument("single_model_relation_check: requires T1 >= 2");

    UncertaintyMaps maps = uncertainty_maps(b);
    MomentAccumulator acc;
    for (const Tensor& s : b.samples()) acc.accumulate(s);
    Tensor unbiased = acc.finalize(VarianceKind::Unbiased).second;

    const double t1 = static_cast<double>(b.t1());
    SingleModelRelationReport report;
    report.t1 = b.t1();
    for (std::size_t i = 0; i < unbiased.size(); ++i) {
        double lhs = maps.var_predictive[i] - b.eps2();
        double rhs = (t1 - 1.0) / t1 * unbiased[i];
        report.max_relative_deviation =
            std::max(report.max_relative_deviation, rel_gap(lhs, rhs));
    }
    return report;
}

Tensor sample_predictive(const ReconstructionBatch& b, RngStream& stream) {
    std::size_t pick = stream.next_index(b.samples().size());
    Tensor out = b.samples()[pick];
    const double eps = std::sqrt(b.eps2());
    for (auto& v : out.data()) v += eps * stream.next_normal();
    return out;
}

}  // namespace uqimg
