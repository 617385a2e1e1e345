#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "uqimg/conformal.hpp"

using namespace uqimg;

TEST_CASE("calibrate picks the corrected order statistic") {
    std::vector<double> scores{1, 2, 3, 4, 5};
    CHECK(calibrate(scores, 0.2, CalibrationMode::Conformal).threshold == 5.0);
    CHECK(calibrate(scores, 0.5, CalibrationMode::Conformal).threshold == 3.0);
    // Naive quantile skips the finite-sample correction.
    CHECK(calibrate(scores, 0.2, CalibrationMode::Uncalibrated).threshold == 4.0);
    CHECK(calibrate(scores, 0.5, CalibrationMode::Uncalibrated).threshold == 3.0);
}

TEST_CASE("quantile level above one yields an infinite threshold") {
    std::vector<double> scores{0.3, 0.1, 0.2};
    CalibrationRecord rec = calibrate(scores, 0.1, CalibrationMode::Conformal);
    CHECK(std::isinf(rec.threshold));
    CHECK(in_set(1e308, rec));
    CHECK(in_set(-1e308, rec));
    CHECK(in_set(std::numeric_limits<double>::infinity(), rec));
}

TEST_CASE("calibrate input validation") {
    CHECK_THROWS(calibrate({}, 0.5, CalibrationMode::Conformal));
    CHECK_THROWS(calibrate({1.0}, 0.0, CalibrationMode::Conformal));
    CHECK_THROWS(calibrate({1.0}, 1.0, CalibrationMode::Conformal));
}

TEST_CASE("membership boundary is inclusive") {
    CalibrationRecord rec = calibrate({1, 2, 3, 4, 5}, 0.5, CalibrationMode::Conformal);
    REQUIRE(rec.threshold == 3.0);
    CHECK(in_set(3.0, rec));
    CHECK_FALSE(in_set(3.0 + 1e-12, rec));
    CHECK(in_set(2.9999, rec));
}

TEST_CASE("thresholds are monotone in alpha and conformal dominates uncalibrated") {
    RngStream rng(811, 0);
    std::vector<double> scores;
    for (int i = 0; i < 40; ++i) scores.push_back(rng.next_normal());

    double previous = std::numeric_limits<double>::infinity();
    for (double alpha = 0.02; alpha < 1.0; alpha += 0.02) {
        CalibrationRecord conf = calibrate(scores, alpha, CalibrationMode::Conformal);
        CalibrationRecord naive = calibrate(scores, alpha, CalibrationMode::Uncalibrated);
        CHECK(conf.threshold <= previous);
        CHECK(conf.threshold >= naive.threshold);
        previous = conf.threshold;
    }

    // Set nesting: anything inside the higher-alpha set sits inside the lower.
    CalibrationRecord wide = calibrate(scores, 0.1, CalibrationMode::Conformal);
    CalibrationRecord narrow = calibrate(scores, 0.6, CalibrationMode::Conformal);
    for (double s : scores)
        if (in_set(s, narrow)) CHECK(in_set(s, wide));
}

TEST_CASE("coverage of exchangeable scores sits in the split-conformal band") {
    RngStream rng(812, 0);
    const std::size_t pool = 200, n_cal = 100;
    std::vector<double> scores;
    for (std::size_t i = 0; i < pool; ++i) scores.push_back(rng.next_uniform());

    std::vector<double> grid;
    for (int i = 0; i < 25; ++i) grid.push_back(0.02 + 0.04 * i);

    CoverageReport report = coverage_from_scores(scores, grid, 200, n_cal, 901,
                                                 CalibrationMode::Conformal);
    for (std::size_t a = 0; a < grid.size(); ++a) {
        double lo = 1.0 - grid[a];
        double hi = lo + 1.0 / (n_cal + 1.0);
        double slack = 3.0 * report.stderr_coverage[a] + 1e-9;
        CHECK(report.mean_coverage[a] >= lo - slack);
        CHECK(report.mean_coverage[a] <= hi + slack);
    }
}

TEST_CASE("alpha 0.99 with 100 calibration scores covers near the floor") {
    RngStream rng(813, 0);
    std::vector<double> scores;
    for (int i = 0; i < 200; ++i) scores.push_back(rng.next_normal());
    CoverageReport report = coverage_from_scores(scores, {0.99}, 400, 100, 902,
                                                 CalibrationMode::Conformal);
    // k = ceil(101 * 0.01) = 2, so expected coverage is about 2/101.
    CHECK(report.mean_coverage[0] > 0.005);
    CHECK(report.mean_coverage[0] < 0.04);
}

TEST_CASE("coverage report is deterministic in the seed") {
    RngStream rng(814, 0);
    std::vector<double> scores;
    for (int i = 0; i < 60; ++i) scores.push_back(rng.next_normal());
    std::vector<double> grid{0.1, 0.5, 0.9};
    CoverageReport a = coverage_from_scores(scores, grid, 50, 30, 99,
                                            CalibrationMode::Conformal);
    CoverageReport b = coverage_from_scores(scores, grid, 50, 30, 99,
                                            CalibrationMode::Conformal);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(a.mean_coverage[i] == b.mean_coverage[i]);
        CHECK(a.stderr_coverage[i] == b.stderr_coverage[i]);
    }
    CoverageReport c = coverage_from_scores(scores, grid, 50, 30, 100,
                                            CalibrationMode::Conformal);
    bool any_diff = false;
    for (std::size_t i = 0; i < grid.size(); ++i)
        any_diff |= c.mean_coverage[i] != a.mean_coverage[i];
    CHECK(any_diff);
}

TEST_CASE("uncalibrated mode requires fixed scores and shifts with them") {
    RngStream rng(815, 0);
    std::vector<double> scores;
    for (int i = 0; i < 80; ++i) scores.push_back(rng.next_normal());
    std::vector<double> grid{0.2, 0.5};
    CHECK_THROWS(coverage_from_scores(scores, grid, 10, 40, 1,
                                      CalibrationMode::Uncalibrated));

    // Training scores far below the pool force severe undercoverage.
    std::vector<double> low(40, -100.0);
    CoverageReport under = coverage_from_scores(scores, grid, 10, 40, 1,
                                                CalibrationMode::Uncalibrated, &low);
    CHECK(under.mean_coverage[0] == 0.0);

    std::vector<double> high(40, 100.0);
    CoverageReport over = coverage_from_scores(scores, grid, 10, 40, 1,
                                               CalibrationMode::Uncalibrated, &high);
    CHECK(over.mean_coverage[0] == 1.0);
}

TEST_CASE("score is the negative predictive log-density") {
    Tensor x({4}, {0.1, 0.2, 0.3, 0.4});
    ReconstructionBatch b({x}, 1, 1, 1e-5, BatchProvenance{});
    CHECK(score(b, x) == doctest::Approx(-19.3500967971).epsilon(1e-9));
    CHECK(score(b, x) == -predictive_logpdf(b, x));

    // Score grows with the residual to the nearest component.
    RngStream rng(816, 0);
    Tensor base = rng.draw_uniform({4});
    ReconstructionBatch fixed({base}, 1, 1, 1e-5, BatchProvenance{});
    double previous = score(fixed, base);
    for (double shift : {0.001, 0.002, 0.004, 0.008}) {
        Tensor probe = base;
        for (auto& v : probe.data()) v += shift;
        double s = score(fixed, probe);
        CHECK(s > previous);
        previous = s;
    }
}
