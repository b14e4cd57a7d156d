#pragma once

#include "normlab/core/tensor.hpp"

#include <cstddef>
#include <vector>

namespace normlab {

struct GroupNormConfig {
    std::size_t groups = 32;
    double eps = 1e-5;
};

struct GnCache {
    Tensor4 normalized;
    std::vector<double> inv_std; // per (sample, group), sample-major
    std::size_t groups = 1;
};

struct GnForward {
    Tensor4 y;
    GnCache cache;
};

// Per sample and per contiguous channel group, normalize over (C/G, H, W).
// Statistics never cross the batch axis. Throws ConfigError if C % G != 0 and
// DegenerateBatchError if a group holds fewer than two values.
GnForward gn_normalize(const Tensor4 &x, const GroupNormConfig &cfg);

Tensor4 gn_backward(const GnCache &cache, const Tensor4 &dy);

} // namespace normlab
