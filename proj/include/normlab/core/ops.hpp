#pragma once

#include "normlab/core/tensor.hpp"

#include <cstddef>
#include <span>

namespace normlab {

struct MeanVar {
    Tensor4 mean;
    Tensor4 var; // biased: divides by the reduced extent
};

// Mean and biased variance over exactly the selected axes. Outputs keep the
// rank of x with reduced axes at extent 1. Two-pass, fixed summation order.
MeanVar reduce_mean_var(const Tensor4 &x, const AxisSet &axes);

enum class BroadcastOp { Sub, Div, Mul, Add };

// Elementwise x (op) stat where each axis of stat is either x's extent or 1.
Tensor4 broadcast_apply(const Tensor4 &x, const Tensor4 &stat, BroadcastOp op);

// Channel grouping used by group normalization: group g owns the contiguous
// channel block [g * C/G, (g + 1) * C/G). Because channels of a group are
// adjacent in NCHW, each (sample, group) is one contiguous run of memory.
class GroupedView {
  public:
    // Throws ConfigError when groups == 0 or C % groups != 0.
    GroupedView(const Tensor4 &x, std::size_t groups);

    std::size_t batch() const { return shape_.n; }
    std::size_t groups() const { return groups_; }
    std::size_t channels_per_group() const { return shape_.c / groups_; }
    std::size_t group_size() const { return channels_per_group() * shape_.plane(); }
    std::size_t channel(std::size_t g, std::size_t k) const {
        return g * channels_per_group() + k;
    }

    std::span<const double> group(std::size_t n, std::size_t g) const {
        return {base_ + (n * groups_ + g) * group_size(), group_size()};
    }
    double operator()(std::size_t n, std::size_t g, std::size_t k, std::size_t h,
                      std::size_t w) const {
        return group(n, g)[(k * shape_.h + h) * shape_.w + w];
    }

  private:
    const double *base_;
    Shape4 shape_;
    std::size_t groups_;
};

// (N, C, H, W) -> (N, G, C/G, H*W), the 5D group layout folded into rank 4.
Tensor4 to_grouped(const Tensor4 &x, std::size_t groups);
// Inverse of to_grouped.
Tensor4 from_grouped(const Tensor4 &grouped, const Shape4 &original);

} // namespace normlab
