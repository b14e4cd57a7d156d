#pragma once

#include "normlab/core/random.hpp"
#include "normlab/core/tensor.hpp"
#include "normlab/norm/gnplus.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace normlab {

// Parameters excluded from weight decay by default are NormAffine and Gate.
enum class ParamKind { Weight, Bias, NormAffine, Gate };

struct ParamRef {
    std::string name;
    std::span<double> value;
    std::span<double> grad;
    ParamKind kind;
    std::vector<std::size_t> dims; // logical shape, product == value.size()
};

// Non-trainable state that still belongs in a checkpoint (BN running stats).
struct BufferRef {
    std::string name;
    std::span<double> value;
};

struct ForwardContext {
    bool train = true;
    bool update_running_stats = true; // BN running averages
    bool inject_noise = true;         // noise hooks; only honoured in train mode

    static ForwardContext training() { return {}; }
    static ForwardContext evaluation() { return {false, false, false}; }
    // Train-mode statistics with every side effect suppressed.
    static ForwardContext probe() { return {true, false, false}; }
};

class Layer {
  public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    virtual Tensor4 forward(const Tensor4 &x, const ForwardContext &ctx) = 0;
    // Uses the cache of the latest forward; overwrites parameter gradients.
    virtual Tensor4 backward(const Tensor4 &dy) = 0;

    virtual void collect_params(std::vector<ParamRef> &, const std::string &) {}
    virtual void collect_buffers(std::vector<BufferRef> &, const std::string &) {}
};

// ---- functional forms -------------------------------------------------------

Tensor4 relu_forward(const Tensor4 &x);
Tensor4 relu_backward(const Tensor4 &x, const Tensor4 &dy);

// (N, C, H, W) -> (N, C, 1, 1)
Tensor4 global_avg_pool_forward(const Tensor4 &x);
Tensor4 global_avg_pool_backward(const Shape4 &input_shape, const Tensor4 &dy);

// x is flattened per sample to D = C*H*W; weight is (K, D, 1, 1); y is (N, K, 1, 1).
Tensor4 linear_forward(const Tensor4 &x, const Tensor4 &weight, std::span<const double> bias);

struct LinearGrads {
    Tensor4 dx;
    Tensor4 dweight;
    std::vector<double> dbias;
};
LinearGrads linear_backward(const Tensor4 &x, const Tensor4 &weight, const Tensor4 &dy);

// y + n with n ~ Normal(mu, sigma) drawn i.i.d. per element from rng.
// Throws ConfigError when sigma < 0. With sigma == 0 no draws are made.
Tensor4 noise_inject(const Tensor4 &y, double mu, double sigma, Rng &rng);

// ---- layers -----------------------------------------------------------------

class ReluLayer final : public Layer {
  public:
    std::string kind() const override { return "relu"; }
    Tensor4 forward(const Tensor4 &x, const ForwardContext &ctx) override;
    Tensor4 backward(const Tensor4 &dy) override;

  private:
    Tensor4 input_;
};

class GlobalAvgPoolLayer final : public Layer {
  public:
    std::string kind() const override { return "global_avg_pool"; }
    Tensor4 forward(const Tensor4 &x, const ForwardContext &ctx) override;
    Tensor4 backward(const Tensor4 &dy) override;

  private:
    Shape4 input_shape_{};
};

class LinearLayer final : public Layer {
  public:
    LinearLayer(std::size_t in_features, std::size_t out_features, Rng &init);

    std::string kind() const override { return "linear"; }
    Tensor4 forward(const Tensor4 &x, const ForwardContext &ctx) override;
    Tensor4 backward(const Tensor4 &dy) override;
    void collect_params(std::vector<ParamRef> &out, const std::string &prefix) override;

    Tensor4 &weight() { return weight_; }

  private:
    Tensor4 weight_, dweight_;
    std::vector<double> bias_, dbias_;
    Tensor4 input_;
};

enum class NormKind { BatchNorm, GroupNorm, GNPlusGNFirst, GNPlusBNFirst, GNPlusParallel };

std::string_view norm_kind_name(NormKind k);
// Accepts the names printed by norm_kind_name plus the short forms
// bn, gn, gnfirst, bnfirst, parallel. Throws ConfigError otherwise.
NormKind parse_norm_kind(std::string_view name);
bool is_gnplus(NormKind k);

// BN or GN followed by a per-channel affine, or one of the gated variants.
class NormLayer final : public Layer {
  public:
    NormLayer(NormKind kind, std::size_t channels, std::size_t groups);

    std::string kind() const override { return std::string(norm_kind_name(kind_)); }
    Tensor4 forward(const Tensor4 &x, const ForwardContext &ctx) override;
    Tensor4 backward(const Tensor4 &dy) override;
    void collect_params(std::vector<ParamRef> &out, const std::string &prefix) override;
    void collect_buffers(std::vector<BufferRef> &out, const std::string &prefix) override;

    NormKind norm_kind() const { return kind_; }
    GNPlusState &state() { return state_; }
    const GNPlusState &state() const { return state_; }
    // Only meaningful for gated kinds.
    double lambda() const { return state_.lambda; }

  private:
    NormKind kind_;
    GNPlusState state_;
    std::vector<double> dgamma_, dbeta_;
    double dlambda_ = 0.0;

    std::optional<GNPlusCache> gated_;
    std::optional<BnCache> bn_;
    std::optional<GnCache> gn_;
    Tensor4 normalized_;
};

class NoiseHookLayer final : public Layer {
  public:
    NoiseHookLayer(double mu, double sigma, std::uint64_t seed);

    std::string kind() const override { return "noise_hook"; }
    Tensor4 forward(const Tensor4 &x, const ForwardContext &ctx) override;
    Tensor4 backward(const Tensor4 &dy) override { return dy; }

  private:
    double mu_, sigma_;
    Rng rng_;
};

} // namespace normlab
