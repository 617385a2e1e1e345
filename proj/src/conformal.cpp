#include "uqimg/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uqimg {

double score(const ReconstructionBatch& b, const Tensor& x) {
    return -predictive_logpdf(b, x);
}

std::string to_string(CalibrationMode m) {
    return m == CalibrationMode::Conformal ? "conformal" : "uncalibrated";
}

namespace {

// 1-based order-statistic rank for the requested mode; 0 means +infinity.
std::size_t threshold_rank(std::size_t n, double alpha, CalibrationMode mode) {
    const double target = mode == CalibrationMode::Conformal
                              ? (static_cast<double>(n) + 1.0) * (1.0 - alpha)
                              : static_cast<double>(n) * (1.0 - alpha);
    std::size_t k = static_cast<std::size_t>(std::ceil(target));
    if (k < 1) k = 1;
    return k > n ? 0 : k;
}

double sorted_threshold(const std::vector<double>& sorted, double alpha,
                        CalibrationMode mode) {
    std::size_t k = threshold_rank(sorted.size(), alpha, mode);
    return k == 0 ? std::numeric_limits<double>::infinity() : sorted[k - 1];
}

}  // namespace

CalibrationRecord calibrate(std::vector<double> scores, double alpha, CalibrationMode mode) {
    if (scores.empty()) throw std::invalid_argument("calibrate: empty score set");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("calibrate: alpha must lie in (0, 1)");

    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    CalibrationRecord rec;
    rec.alpha = alpha;
    rec.scores = std::move(scores);
    rec.mode = mode;
    rec.threshold = sorted_threshold(sorted, alpha, mode);
    return rec;
}

bool in_set(double s, const CalibrationRecord& rec) { return s <= rec.threshold; }

std::vector<double> pool_scores(const Ensemble& ens, const ImageDataset& pool,
                                const InferenceConfig& cfg) {
    if (!pool.has_measurements())
        throw std::invalid_argument("pool_scores: pool has no measurements");
    pool.validate();
    RngStream seeds(cfg.seed, 0x434F56);  // per-example inference seeds
    std::vector<double> scores;
    scores.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        InferenceConfig per = cfg;
        per.seed = seeds.sub(i).next_u64();
        ReconstructionBatch batch = infer(ens, pool.measurements[i], per);
        scores.push_back(score(batch, pool.images[i].pixels));
    }
    return scores;
}

CoverageReport coverage_from_scores(const std::vector<double>& scores,
                                    const std::vector<double>& alpha_grid,
                                    std::size_t split_count, std::size_t n_cal,
                                    std::uint64_t seed, CalibrationMode mode,
                                    const std::vector<double>* fixed_scores) {
    const std::size_t pool = scores.size();
    if (pool < n_cal + 1)
        throw std::invalid_argument("coverage_from_scores: pool smaller than n_cal + 1");
    if (split_count < 1 || alpha_grid.empty())
        throw std::invalid_argument("coverage_from_scores: empty experiment");
    for (double a : alpha_grid)
        if (!(a > 0.0 && a < 1.0))
            throw std::invalid_argument("coverage_from_scores: alpha outside (0, 1)");
    if (mode == CalibrationMode::Uncalibrated &&
        (fixed_scores == nullptr || fixed_scores->empty()))
        throw std::invalid_argument(
            "coverage_from_scores: uncalibrated mode needs fixed training scores");

    std::vector<double> fixed_sorted;
    if (mode == CalibrationMode::Uncalibrated) {
        fixed_sorted = *fixed_scores;
        std::sort(fixed_sorted.begin(), fixed_sorted.end());
    }

    const std::size_t n_test = pool - n_cal;
    RngStream splitter(seed, 0x53504C54);
    std::vector<std::vector<double>> coverage(alpha_grid.size(),
                                              std::vector<double>(split_count));

    for (std::size_t s = 0; s < split_count; ++s) {
        RngStream split_stream = splitter.sub(s);
        std::vector<std::size_t> order = split_stream.permutation(pool);

        std::vector<double> cal_sorted;
        cal_sorted.reserve(n_cal);
        for (std::size_t i = 0; i < n_cal; ++i) cal_sorted.push_back(scores[order[i]]);
        std::sort(cal_sorted.begin(), cal_sorted.end());

        for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
            const double threshold =
                mode == CalibrationMode::Conformal
                    ? sorted_threshold(cal_sorted, alpha_grid[a], mode)
                    : sorted_threshold(fixed_sorted, alpha_grid[a], mode);
            std::size_t covered = 0;
            for (std::size_t i = n_cal; i < pool; ++i)
                covered += scores[order[i]] <= threshold ? 1 : 0;
            coverage[a][s] = static_cast<double>(covered) / static_cast<double>(n_test);
        }
    }

    CoverageReport report;
    report.alpha_grid = alpha_grid;
    report.split_count = split_count;
    report.n_cal = n_cal;
    report.n_test = n_test;
    report.mode = mode;
    for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
        double mean = 0.0;
        for (double c : coverage[a]) mean += c;
        mean /= static_cast<double>(split_count);
        double var = 0.0;
        for (double c : coverage[a]) var += (c - mean) * (c - mean);
        double stderr_mean =
            split_count > 1
                ? std::sqrt(var / static_cast<double>(split_count - 1) /
                            static_cast<double>(split_count))
                : 0.0;
        report.mean_coverage.push_back(mean);
        report.stderr_coverage.push_back(stderr_mean);
    }
    return report;
}

CoverageReport coverage_eval(const Ensemble& ens, const ImageDataset& pool,
                             const std::vector<double>& alpha_grid,
                             std::size_t split_count, std::size_t n_cal,
                             const InferenceConfig& cfg, std::uint64_t seed,
                             CalibrationMode mode, const std::vector<double>* fixed_scores) {
    if (pool.size() < n_cal + 1)
        throw std::invalid_argument("coverage_eval: pool smaller than n_cal + 1");
    std::vector<double> scores = pool_scores(ens, pool, cfg);
    return coverage_from_scores(scores, alpha_grid, split_count, n_cal, seed, mode,
                                fixed_scores);
}

}  // namespace uqimg
