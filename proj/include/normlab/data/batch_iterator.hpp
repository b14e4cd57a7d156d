#pragma once

#include "normlab/core/tensor.hpp"
#include "normlab/data/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace normlab {

struct Batch {
    Tensor4 images;
    std::vector<int> labels;
    std::vector<std::size_t> indices; // positions in the source set
};

enum class IterMode { Train, Eval };

// Train mode visits a seeded permutation (derived from shuffle_seed and epoch)
// and drops the final partial batch, so BN always sees the same extent. Eval
// mode walks the set in order and keeps the partial batch.
class BatchIterator {
  public:
    BatchIterator(const LabeledImageSet &set, std::size_t batch_size, IterMode mode,
                  std::uint64_t shuffle_seed = 0, std::size_t epoch = 0);

    std::size_t batch_count() const;
    const std::vector<std::size_t> &order() const { return order_; }

    // Fills `out` with the next batch; false when the epoch is exhausted.
    bool next(Batch &out);

  private:
    const LabeledImageSet *set_;
    std::size_t batch_size_;
    IterMode mode_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

} // namespace normlab
