#include "uqimg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uqimg {

double logsumexp(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("logsumexp: empty reduction");
    double m = -std::numeric_limits<double>::infinity();
    for (double v : values) {
        if (std::isnan(v)) throw std::invalid_argument("logsumexp: NaN input");
        m = std::max(m, v);
    }
    if (std::isinf(m)) return m;
    // Count of maximal entries handled exactly: for k equal maxima the
    // shifted sum is exactly k and log(k) carries no exp round-off.
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - m);
    return m + std::log(sum);
}

}  // namespace uqimg
