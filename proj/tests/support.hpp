#pragma once

// Shared test-only oracles. These stay independent of the library paths they
// check: central finite differences for gradients, grid quadrature for the
// conjugate posterior, and long-double direct summation for mixture
// densities.

#include <cmath>
#include <functional>
#include <vector>

#include "uqimg/autodiff.hpp"
#include "uqimg/tensor.hpp"

namespace testsupport {

// Builds a tape from leaf tensors and returns the scalar output node.
using TapeBuilder =
    std::function<uqimg::NodeId(uqimg::Tape&, const std::vector<uqimg::Tensor>&)>;

inline double eval_builder(const TapeBuilder& build,
                           const std::vector<uqimg::Tensor>& leaves) {
    uqimg::Tape tape;
    return tape.value(build(tape, leaves))[0];
}

// Central finite difference of the builder output w.r.t. every coordinate of
// every leaf, step h.
inline std::vector<uqimg::Tensor> fd_gradients(const TapeBuilder& build,
                                               std::vector<uqimg::Tensor> leaves,
                                               double h = 1e-5) {
    std::vector<uqimg::Tensor> grads;
    grads.reserve(leaves.size());
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        uqimg::Tensor g = uqimg::Tensor::zeros(leaves[li].shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            double saved = leaves[li][i];
            leaves[li][i] = saved + h;
            double up = eval_builder(build, leaves);
            leaves[li][i] = saved - h;
            double down = eval_builder(build, leaves);
            leaves[li][i] = saved;
            g[i] = (up - down) / (2.0 * h);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

inline double rel_err(double a, double b, double floor = 1e-6) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

// Posterior moments of a scalar Gaussian prior x ~ N(mu0, tau2) observed as
// y = x + noise, noise ~ N(0, sigma2), by trapezoid quadrature of
// prior * likelihood on a wide grid.
struct ScalarPosterior {
    double mean;
    double variance;
};

inline ScalarPosterior quadrature_posterior(double mu0, double tau2, double sigma2,
                                            double y, int grid_points = 20001) {
    double tau = std::sqrt(tau2);
    double lo = std::min(mu0, y) - 12.0 * tau;
    double hi = std::max(mu0, y) + 12.0 * tau;
    double dx = (hi - lo) / (grid_points - 1);
    long double z = 0.0L, m1 = 0.0L, m2 = 0.0L;
    for (int i = 0; i < grid_points; ++i) {
        double x = lo + i * dx;
        long double w =
            std::exp(-0.5 * (x - mu0) * (x - mu0) / tau2 - 0.5 * (y - x) * (y - x) / sigma2);
        if (i == 0 || i == grid_points - 1) w *= 0.5L;
        z += w;
        m1 += w * x;
        m2 += w * x * x;
    }
    double mean = static_cast<double>(m1 / z);
    double var = static_cast<double>(m2 / z) - mean * mean;
    return {mean, var};
}

// Mixture log-density log[(1/K) sum_k N(x | mu_k, eps2 I)] by direct
// long-double summation, valid while the exponents stay representable.
inline double direct_mixture_logpdf(const std::vector<std::vector<double>>& components,
                                    const std::vector<double>& x, double eps2) {
    const std::size_t n = x.size();
    long double norm =
        std::pow(2.0L * static_cast<long double>(M_PI) * static_cast<long double>(eps2),
                 -static_cast<long double>(n) / 2.0L);
    long double acc = 0.0L;
    for (const auto& mu : components) {
        long double q = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            long double d = static_cast<long double>(x[i]) - static_cast<long double>(mu[i]);
            q += d * d;
        }
        acc += norm * std::exp(-q / (2.0L * static_cast<long double>(eps2)));
    }
    acc /= static_cast<long double>(components.size());
    return static_cast<double>(std::log(acc));
}

}  // namespace testsupport
