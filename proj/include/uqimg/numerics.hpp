#pragma once

#include <span>
#include <vector>

namespace uqimg {

/// log sum_i exp(values[i]) computed with a max shift so extreme arguments
/// neither overflow nor collapse to -inf. Exact for all-equal inputs.
/// Throws std::invalid_argument on an empty reduction or NaN input.
double logsumexp(std::span<const double> values);

inline double logsumexp(const std::vector<double>& values) {
    return logsumexp(std::span<const double>(values));
}

}  // namespace uqimg
