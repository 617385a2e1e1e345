#include "uqimg/ensemble.hpp"

#include <cmath>
#include <stdexcept>

#include "uqimg/moments.hpp"

namespace uqimg {

std::string to_string(EnsembleStrategy s) {
    switch (s) {
        case EnsembleStrategy::Deep: return "deep";
        case EnsembleStrategy::McDropout: return "mc-dropout";
        case EnsembleStrategy::SwagDiag: return "swag-diag";
    }
    return "deep";
}

EnsembleStrategy ensemble_strategy_from_string(const std::string& s) {
    if (s == "deep") return EnsembleStrategy::Deep;
    if (s == "mc-dropout") return EnsembleStrategy::McDropout;
    if (s == "swag-diag") return EnsembleStrategy::SwagDiag;
    throw std::invalid_argument("unknown ensemble strategy: " + s);
}

void Ensemble::validate() const {
    if (members.empty()) throw std::invalid_argument("Ensemble: needs at least one member");
    const bool analytic = members.front().is_analytic();
    const std::size_t out = members.front().output_dim();
    const std::size_t lat = members.front().latent_dim();
    for (const GeneratorParams& m : members)
        if (m.is_analytic() != analytic || m.output_dim() != out || m.latent_dim() != lat)
            throw std::invalid_argument("Ensemble: members must share variant and shapes");
}

Ensemble train_deep_ensemble(const TrainingConfig& cfg, const ImageDataset& data,
                             std::uint64_t master_seed, std::size_t t2_count,
                             std::vector<TrainingLog>* logs) {
    if (t2_count < 1) throw std::invalid_argument("train_deep_ensemble: T2 must be >= 1");
    Ensemble ens;
    ens.strategy = EnsembleStrategy::Deep;
    for (std::size_t t2 = 1; t2 <= t2_count; ++t2) {
        TrainingLog* log = nullptr;
        if (logs) {
            logs->emplace_back();
            log = &logs->back();
        }
        ens.members.push_back(train_generator(cfg, data, RngStream(master_seed, t2), log));
        ens.seeds.push_back(t2);
    }
    ens.validate();
    return ens;
}

SwagPosterior fit_swag(const std::vector<Tensor>& snapshots) {
    if (snapshots.size() < 2)
        throw std::invalid_argument("fit_swag: needs at least two snapshots");
    MomentAccumulator acc;
    for (const Tensor& s : snapshots) acc.accumulate(s);
    auto [mean, variance] = acc.finalize(VarianceKind::Population);
    return SwagPosterior{std::move(mean), std::move(variance), snapshots.size()};
}

Ensemble sample_swag(const SwagPosterior& posterior, const GeneratorParams& tmpl,
                     std::size_t t2_count, RngStream& stream) {
    if (t2_count < 1) throw std::invalid_argument("sample_swag: T2 must be >= 1");
    Ensemble ens;
    ens.strategy = EnsembleStrategy::SwagDiag;
    for (std::size_t t2 = 1; t2 <= t2_count; ++t2) {
        Tensor flat = posterior.mean;
        Tensor noise = stream.draw_normal(flat.shape());
        for (std::size_t i = 0; i < flat.size(); ++i)
            flat[i] += std::sqrt(posterior.variance[i]) * noise[i];
        ens.members.push_back(unflatten_params(tmpl, flat));
        ens.seeds.push_back(t2);
    }
    ens.validate();
    return ens;
}

Ensemble mc_dropout_ensemble(const GeneratorParams& params, std::size_t t2_count,
                             RngStream& stream) {
    if (t2_count < 1) throw std::invalid_argument("mc_dropout_ensemble: T2 must be >= 1");
    if (params.is_analytic())
        throw std::invalid_argument("mc_dropout_ensemble: requires the cvae variant");
    const double rate = params.cvae().dropout_rate;
    if (rate <= 0.0) throw std::invalid_argument("dropout disabled");

    const double keep = 1.0 - rate;
    const std::size_t h = params.cvae().hidden;
    Ensemble ens;
    ens.strategy = EnsembleStrategy::McDropout;
    for (std::size_t t2 = 1; t2 <= t2_count; ++t2) {
        GeneratorParams member = params;
        member.cvae().dropout_masks.clear();
        for (int layer = 0; layer < 2; ++layer) {
            Tensor mask = Tensor::zeros({h});
            for (std::size_t j = 0; j < h; ++j)
                mask[j] = stream.next_uniform() < keep ? 1.0 / keep : 0.0;
            member.cvae().dropout_masks.push_back(std::move(mask));
        }
        ens.members.push_back(std::move(member));
        ens.seeds.push_back(t2);
    }
    ens.validate();
    return ens;
}

}  // namespace uqimg
