#pragma once

#include "normlab/net/layers.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace normlab {

enum class OptimizerKind { SgdMomentum, Adam };

struct ScheduleStep {
    std::size_t epoch;  // zero-based epoch index from which the factor applies
    double multiplier;  // factors of all reached steps multiply together
};

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::SgdMomentum;
    double lr = 0.1;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0;
    // Also decay gamma, beta and lambda of normalization layers.
    bool decay_norm_params = false;
    std::vector<ScheduleStep> schedule;

    // Throws ConfigError: lr <= 0, negative decay, unsorted schedule, ...
    void validate() const;
    double lr_at(std::size_t epoch) const;
};

// 0.1 * batch_size / 128
double batch_scaled_lr(std::size_t batch_size);

// Weight decay is the coupled L2 form, g <- g + wd * theta, for both kinds.
// SGD:  v <- momentum * v + g;  theta <- theta - lr * v
// Adam: bias-corrected first and second moments.
class Optimizer {
  public:
    explicit Optimizer(OptimizerConfig cfg);

    // Parameter order must stay the same between calls.
    void step(std::span<const ParamRef> params, double lr);

    std::uint64_t step_count() const { return steps_; }
    const OptimizerConfig &config() const { return cfg_; }

  private:
    bool decays(const ParamRef &p) const;

    OptimizerConfig cfg_;
    std::uint64_t steps_ = 0;
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
};

} // namespace normlab
