#pragma once

#include <cstdint>
#include <vector>

#include "uqimg/uq.hpp"

namespace uqimg {

/// Score function of the prediction set: negative predictive log-density.
double score(const ReconstructionBatch& b, const Tensor& x);

enum class CalibrationMode { Conformal, Uncalibrated };

std::string to_string(CalibrationMode m);

/// Threshold record. Conformal mode uses the ceil((n+1)(1-alpha))-th order
/// statistic with the finite-sample correction (+infinity once the quantile
/// level exceeds one); uncalibrated mode uses the naive ceil(n(1-alpha))-th
/// order statistic.
struct CalibrationRecord {
    double alpha = 0.1;
    std::vector<double> scores;
    double threshold = 0.0;
    CalibrationMode mode = CalibrationMode::Conformal;

    std::size_t n() const { return scores.size(); }
};

CalibrationRecord calibrate(std::vector<double> scores, double alpha, CalibrationMode mode);

/// Prediction-set membership: s <= threshold, boundary inclusive.
bool in_set(double s, const CalibrationRecord& rec);

struct CoverageReport {
    std::vector<double> alpha_grid;
    std::vector<double> mean_coverage;
    std::vector<double> stderr_coverage;
    std::size_t split_count = 0;
    std::size_t n_cal = 0;
    std::size_t n_test = 0;
    CalibrationMode mode = CalibrationMode::Conformal;
};

/// Ground-truth score for every pool example, batches computed once with
/// per-example derived seeds.
std::vector<double> pool_scores(const Ensemble& ens, const ImageDataset& pool,
                                const InferenceConfig& cfg);

/// Coverage experiment on a precomputed score table: split_count random
/// calibration/test splits, one empirical coverage per alpha per split.
/// Uncalibrated mode takes its threshold from fixed_scores (training-score
/// stand-in) instead of the calibration half.
CoverageReport coverage_from_scores(const std::vector<double>& scores,
                                    const std::vector<double>& alpha_grid,
                                    std::size_t split_count, std::size_t n_cal,
                                    std::uint64_t seed, CalibrationMode mode,
                                    const std::vector<double>* fixed_scores = nullptr);

/// End-to-end coverage experiment over a measured pool.
CoverageReport coverage_eval(const Ensemble& ens, const ImageDataset& pool,
                             const std::vector<double>& alpha_grid,
                             std::size_t split_count, std::size_t n_cal,
                             const InferenceConfig& cfg, std::uint64_t seed,
                             CalibrationMode mode = CalibrationMode::Conformal,
                             const std::vector<double>* fixed_scores = nullptr);

}  // namespace uqimg
