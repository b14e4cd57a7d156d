#pragma once

#include "normlab/data/batch_iterator.hpp"
#include "normlab/data/dataset.hpp"
#include "normlab/net/model.hpp"
#include "normlab/net/optimizer.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace normlab {

struct DivergenceThresholds {
    double max_loss = 1e4;
    double explode_grad_norm = 1e6;
    double vanish_grad_norm = 1e-12;
    std::size_t patience = 3; // consecutive steps
};

struct TrainConfig {
    OptimizerConfig optimizer;
    std::size_t epochs = 1;
    std::size_t batch_size = 128;
    std::size_t eval_batch_size = 500;
    std::uint64_t seed = 0;
    DivergenceThresholds divergence;
    bool augment_flip = false;
    bool augment_crop = false; // pad 4, random 32x32-style crop back to H x W
};

enum class Divergence { None, GradientVanish, GradientExplode };

std::string_view divergence_name(Divergence d);

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    std::vector<double> lambdas;
};

struct TrainOutcome {
    std::vector<EpochRecord> epochs; // completed epochs only
    Divergence divergence = Divergence::None;
    std::optional<std::size_t> divergence_epoch;
    std::optional<std::size_t> divergence_step;
    std::vector<std::string> lambda_names;
    std::vector<double> final_lambdas;
    std::size_t steps = 0;
};

// Delivered after backward and before the optimizer update of every step that
// did not trip divergence detection.
struct StepEvent {
    std::size_t step; // 1-based, global
    std::size_t epoch;
    Model &model;
    const Batch &batch;
    double loss;
    double grad_norm;
};

using StepObserver = std::function<void(const StepEvent &)>;

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Eval mode: running BN statistics, no noise.
EvalResult evaluate(Model &model, const LabeledImageSet &set, std::size_t batch_size);

// Loss and gradients of one batch in train mode; returns the loss and leaves
// the gradients in the model.
double loss_and_gradients(Model &model, const Batch &batch, const ForwardContext &ctx,
                          std::size_t *correct = nullptr);

// Deterministic for a fixed seed. Throws InputError when the training set
// yields no full batch or the validation set is empty.
TrainOutcome train(Model &model, const LabeledImageSet &train_set,
                   const LabeledImageSet &val_set, const TrainConfig &cfg,
                   const StepObserver &observer = {});

} // namespace normlab
