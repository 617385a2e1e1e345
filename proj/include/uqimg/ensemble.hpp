#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uqimg/generators.hpp"

namespace uqimg {

enum class EnsembleStrategy { Deep, McDropout, SwagDiag };

std::string to_string(EnsembleStrategy s);
EnsembleStrategy ensemble_strategy_from_string(const std::string& s);

/// Point-mass surrogate over generator parameters: T2 members sharing one
/// architecture, plus the seeds and config hash that produced them.
struct Ensemble {
    std::vector<GeneratorParams> members;
    EnsembleStrategy strategy = EnsembleStrategy::Deep;
    std::vector<std::uint64_t> seeds;
    std::uint64_t provenance = 0;

    std::size_t size() const { return members.size(); }
    void validate() const;
};

/// Independent per-weight Gaussian fitted to training snapshots.
struct SwagPosterior {
    Tensor mean;
    Tensor variance;
    std::size_t snapshot_count = 0;
};

/// Algorithm of the ensembling stage: member t2 is trained with the stream
/// derived from the master seed and stream id t2 (1-based), so members
/// differ only through initialization and shuffling randomness.
Ensemble train_deep_ensemble(const TrainingConfig& cfg, const ImageDataset& data,
                             std::uint64_t master_seed, std::size_t t2_count,
                             std::vector<TrainingLog>* logs = nullptr);

/// Per-weight mean and population variance over >= 2 equal-length snapshots.
SwagPosterior fit_swag(const std::vector<Tensor>& snapshots);

/// Draw T2 parameter realizations mean + std .* N(0, I); the template
/// supplies the architecture the flat vectors unpack into.
Ensemble sample_swag(const SwagPosterior& posterior, const GeneratorParams& tmpl,
                     std::size_t t2_count, RngStream& stream);

/// T2 member records sharing the trained weights but carrying distinct
/// frozen inverted-dropout masks, each deterministic thereafter.
Ensemble mc_dropout_ensemble(const GeneratorParams& params, std::size_t t2_count,
                             RngStream& stream);

}  // namespace uqimg
