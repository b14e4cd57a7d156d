#pragma once

#include "normlab/core/tensor.hpp"

#include <cstddef>
#include <span>

namespace normlab {

struct CrossEntropyResult {
    double loss = 0.0;    // mean over the batch
    Tensor4 dlogits;      // (softmax - onehot) / N
    std::size_t correct = 0;
};

// logits: (N, K, 1, 1) with K >= 2. Uses a max-shifted log-sum-exp.
// Throws InputError for a label outside [0, K).
CrossEntropyResult cross_entropy(const Tensor4 &logits, std::span<const int> labels);

} // namespace normlab
