#pragma once

#include "normlab/core/random.hpp"
#include "normlab/net/layers.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace normlab {

// 3x3 cross-correlation with zero padding 1. Stride 1 preserves H and W;
// stride 2 gives floor((H - 1) / 2) + 1. Lowered to GEMM through im2col.
struct ConvCache {
    Tensor4 input;
    Tensor4 weight; // (Cout, Cin, 3, 3)
    std::size_t stride = 1;
    Shape4 output_shape{};
};

struct ConvForward {
    Tensor4 y;
    ConvCache cache;
};

struct ConvGrads {
    Tensor4 dx;
    Tensor4 dweight;
    std::vector<double> dbias;
};

ConvForward conv3x3_forward(const Tensor4 &x, const Tensor4 &weight,
                            std::span<const double> bias, std::size_t stride = 1);
ConvGrads conv3x3_backward(const ConvCache &cache, const Tensor4 &dy);

std::size_t conv3x3_output_extent(std::size_t extent, std::size_t stride);

class Conv3x3Layer final : public Layer {
  public:
    // He-normal weights, zero bias.
    Conv3x3Layer(std::size_t in_channels, std::size_t out_channels, std::size_t stride,
                 Rng &init);

    std::string kind() const override { return "conv3x3"; }
    Tensor4 forward(const Tensor4 &x, const ForwardContext &ctx) override;
    Tensor4 backward(const Tensor4 &dy) override;
    void collect_params(std::vector<ParamRef> &out, const std::string &prefix) override;

    Tensor4 &weight() { return weight_; }
    std::vector<double> &bias() { return bias_; }

  private:
    std::size_t stride_;
    Tensor4 weight_, dweight_;
    std::vector<double> bias_, dbias_;
    ConvCache cache_;
};

} // namespace normlab
