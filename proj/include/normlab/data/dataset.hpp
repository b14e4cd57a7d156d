#pragma once

#include "normlab/core/tensor.hpp"

#include <cstddef>
#include <vector>

namespace normlab {

enum class Split { Train, Val };

struct LabeledImageSet {
    Tensor4 images; // (N, 3, H, W)
    std::vector<int> labels;
    int class_count = 0;
    Split split = Split::Train;

    std::size_t size() const { return labels.size(); }

    // Throws InputError unless image and label counts agree and every label is
    // in [0, class_count).
    void validate() const;

    // The first `count` samples (all of them if count >= size()).
    LabeledImageSet head(std::size_t count) const;
};

} // namespace normlab
