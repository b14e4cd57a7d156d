#pragma once

#include "normlab/core/tensor.hpp"

#include <cstddef>
#include <vector>

namespace normlab {

enum class Mode { Train, Eval };

struct BatchNormState {
    double eps = 1e-5;
    double momentum = 0.1;
    std::vector<double> running_mean; // starts at 0
    std::vector<double> running_var;  // starts at 1
    Mode mode = Mode::Train;

    explicit BatchNormState(std::size_t channels);

    std::size_t channels() const { return running_mean.size(); }
};

struct BnCache {
    Tensor4 normalized;
    std::vector<double> inv_std; // per channel
    Mode mode = Mode::Train;
};

struct BnForward {
    Tensor4 y;
    BnCache cache;
};

// Per-channel normalization over (N, H, W), without affine. In train mode the
// batch statistics are used and, unless update_running is false, folded into
// the running averages: running <- (1 - momentum) * running + momentum * batch.
// Eval mode normalizes with the running statistics and leaves them alone.
BnForward bn_normalize(const Tensor4 &x, BatchNormState &state,
                       bool update_running = true);

// Gradient of bn_normalize's output w.r.t. its input. A train-mode cache
// differentiates through the batch mean and variance; an eval-mode cache
// treats the running statistics as constants.
Tensor4 bn_backward(const BnCache &cache, const Tensor4 &dy);

} // namespace normlab
