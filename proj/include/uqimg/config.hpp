#pragma once

#include <cstdint>
#include <string>

#include "uqimg/ensemble.hpp"
#include "uqimg/generators.hpp"

namespace uqimg {

#define UQIMG_VERSION "0.1.0"

/// Full experiment description parsed from the sectioned key=value config.
/// Unknown sections or keys are rejected; every field has a documented
/// default so an empty file is a valid experiment.
struct ExperimentConfig {
    struct Data {
        std::string source = "shapes";  // "shapes" or a path to an IDX file
        std::size_t count = 256;
        std::size_t height = 16;
        std::size_t width = 16;
        double mask_fraction = 0.1;
        double noise_sigma = 0.05;
    } data;

    TrainingConfig train;  // epochs, batch_size, learning_rate, warmup, sizes

    struct EnsembleSection {
        EnsembleStrategy strategy = EnsembleStrategy::Deep;
        std::size_t t2 = 5;
        std::uint64_t master_seed = 1;
        std::string swag_snapshot_policy = "final-half";
        double dropout_rate = 0.0;
    } ensemble;

    struct Infer {
        std::size_t t1 = 128;
        double eps2 = 1e-5;
        std::uint64_t seed = 0;
        bool dense_covariance = false;
    } infer;

    struct Conformal {
        double alpha_start = 0.01;
        double alpha_stop = 0.99;
        std::size_t alpha_count = 100;
        std::size_t split_count = 100;
        std::size_t n_cal = 100;
    } conformal;

    struct Outputs {
        std::string directory = "out";
    } outputs;

    void validate() const;
    std::string canonical_text() const;
    std::uint64_t config_hash() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace uqimg
