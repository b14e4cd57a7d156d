#pragma once

#include "normlab/net/layers.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace normlab {

enum class LayerKind { Conv3x3, Norm, Relu, GlobalAvgPool, Linear, NoiseHook };

struct LayerSpec {
    LayerKind kind;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t stride = 1;
    NormKind norm = NormKind::BatchNorm;
    std::size_t groups = 1;
    double noise_mu = 0.0;
    double noise_sigma = 0.0;

    static LayerSpec conv(std::size_t in, std::size_t out, std::size_t stride = 1);
    static LayerSpec normalization(NormKind kind, std::size_t channels, std::size_t groups);
    static LayerSpec relu();
    static LayerSpec pool();
    static LayerSpec linear(std::size_t in, std::size_t out);
    static LayerSpec noise(double mu, double sigma);
};

// A sequential network. Parameters are enumerated layer by layer in a fixed
// order; that order is the canonical flattening used for gradient vectors.
class Model {
  public:
    explicit Model(std::vector<std::unique_ptr<Layer>> layers);

    Tensor4 forward(const Tensor4 &x, const ForwardContext &ctx);
    void backward(const Tensor4 &dlogits);

    std::vector<ParamRef> params();
    std::vector<BufferRef> buffers();
    std::size_t param_count();

    std::vector<double> flat_params();
    void set_flat_params(std::span<const double> values);
    std::vector<double> flat_grads();

    // One entry per gated normalization layer, in network order.
    std::vector<std::string> lambda_names() const;
    std::vector<double> lambdas() const;

    std::vector<std::unique_ptr<Layer>> &layers() { return layers_; }

  private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Throws ConfigError on incompatible channel counts, a noise hook that does not
// directly follow a normalization layer, or C % G != 0.
Model build_model(std::span<const LayerSpec> specs, std::uint64_t seed);

struct MicroCnnOptions {
    int classes = 10;
    NormKind norm = NormKind::BatchNorm;
    std::size_t groups = 8;
    std::size_t in_channels = 3;
    std::size_t widths[3] = {16, 32, 32};
    bool noise = false;
    double noise_mu = 1e-3;
    double noise_sigma = 1.001;
};

// conv(3->16), norm, relu, conv(16->32, stride 2), norm, relu,
// conv(32->32), norm, relu, global_avg_pool, linear(32->K);
// with a noise hook after each norm when options.noise is set.
std::vector<LayerSpec> micro_cnn_spec(const MicroCnnOptions &options);

// conv(3->c1), norm, relu, conv(c1->c2, stride 2), norm, relu, pool, linear.
std::vector<LayerSpec> two_block_spec(NormKind norm, std::size_t groups, int classes,
                                      std::size_t c1 = 4, std::size_t c2 = 8);

} // namespace normlab
