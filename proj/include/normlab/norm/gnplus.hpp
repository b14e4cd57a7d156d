#pragma once

#include "normlab/core/tensor.hpp"
#include "normlab/norm/batch_norm.hpp"
#include "normlab/norm/group_norm.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace normlab {

// Logistic 1 / (1 + e^-lambda), evaluated without overflow for any finite input.
double sigmoid_gate(double lambda);

struct AffineParams {
    std::vector<double> gamma; // 1
    std::vector<double> beta;  // 0

    explicit AffineParams(std::size_t channels)
        : gamma(channels, 1.0), beta(channels, 0.0) {}
};

// y = gamma[c] * z + beta[c]
Tensor4 affine_forward(const Tensor4 &z, const AffineParams &affine);

struct AffineGrads {
    Tensor4 dz;
    std::vector<double> dgamma;
    std::vector<double> dbeta;
};

AffineGrads affine_backward(const Tensor4 &z, const Tensor4 &dy,
                            std::span<const double> gamma);

// How the group-normalized and batch-normalized paths are wired:
//   GNFirst:  gn_out = GN(x),      bn_out = BN(gn_out)
//   BNFirst:  bn_out = BN(x),      gn_out = GN(bn_out)
//   Parallel: gn_out = GN(x),      bn_out = BN(x)
// and then y = gamma * (s * gn_out + (1 - s) * bn_out) + beta, s = sigmoid(lambda).
enum class GNPlusVariant { GNFirst, BNFirst, Parallel };

std::string_view variant_name(GNPlusVariant v);

struct GNPlusState {
    GNPlusVariant variant;
    double lambda = 1.0;
    GroupNormConfig gn;
    BatchNormState bn;
    AffineParams affine;

    GNPlusState(GNPlusVariant variant, std::size_t channels, std::size_t groups);
};

struct GNPlusCache {
    GNPlusVariant variant = GNPlusVariant::GNFirst;
    double gate = 0.5;
    Tensor4 gn_out;
    Tensor4 bn_out;
    Tensor4 mixed; // pre-affine gated combination
    GnCache gn;
    BnCache bn;
    std::vector<double> gamma;
};

struct GNPlusForward {
    Tensor4 y;
    GNPlusCache cache;
};

struct GNPlusGrads {
    Tensor4 dx;
    std::vector<double> dgamma;
    std::vector<double> dbeta;
    double dlambda = 0.0;
};

// The BN path follows state.bn.mode; in eval mode it uses running statistics
// while the GN path always uses the statistics of the current input.
GNPlusForward gnplus_forward(const Tensor4 &x, GNPlusState &state,
                             bool update_running = true);

// Requires a train-mode cache; throws UsageError otherwise.
GNPlusGrads gnplus_backward(const GNPlusCache &cache, const Tensor4 &dy);

} // namespace normlab
