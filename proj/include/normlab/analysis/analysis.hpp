#pragma once

#include "normlab/data/batch_iterator.hpp"
#include "normlab/net/model.hpp"
#include "normlab/net/trainer.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace normlab {

// PerStep probes the loss at every grid step size from the current parameters.
// PerRun trains once per grid value (lr = eta) and records each run's loss.
enum class LandscapeMode { PerStep, PerRun };

struct AnalysisConfig {
    std::vector<double> eta_grid{1e-4, 2e-4, 3e-4, 4e-4, 5e-4};
    std::size_t probe_every = 1; // steps; 0 disables probing
    LandscapeMode mode = LandscapeMode::PerStep;

    // Throws ConfigError unless the grid is non-empty, positive and ascending.
    void validate() const;
};

struct LandscapeSample {
    std::size_t step = 0;
    std::vector<double> losses; // one per eta; +inf marks a non-finite probe
    double loss_min = 0.0;
    double loss_max = 0.0;
    bool flagged = false;
};

struct GradPredSample {
    std::size_t step = 0;
    double l2_distance = 0.0;
};

struct AnalysisSeries {
    std::vector<double> etas;
    std::vector<LandscapeSample> landscape;
    std::vector<GradPredSample> gradpred;
};

// Anything whose parameters can be read, written and scored.
class ProbeObjective {
  public:
    virtual ~ProbeObjective() = default;
    virtual std::size_t dim() = 0;
    virtual std::vector<double> get() = 0;
    virtual void set(std::span<const double> theta) = 0;
    virtual double loss() = 0;
};

// Loss of a model on one batch, in train mode with running-stat updates and
// noise draws suppressed.
class ModelObjective final : public ProbeObjective {
  public:
    ModelObjective(Model &model, const Batch &batch) : model_(model), batch_(batch) {}
    std::size_t dim() override { return model_.param_count(); }
    std::vector<double> get() override { return model_.flat_params(); }
    void set(std::span<const double> theta) override { model_.set_flat_params(theta); }
    double loss() override;

  private:
    Model &model_;
    const Batch &batch_;
};

// Evaluates L(theta - eta * g) for each eta and restores theta bit-exactly.
LandscapeSample landscape_probe(ProbeObjective &objective, std::span<const double> gradient,
                                std::span<const double> etas, std::size_t step = 0);

// Euclidean norm of current - previous. Throws UsageError on a length mismatch.
double gradient_predictiveness(std::span<const double> current, std::span<const double> previous);

struct AnalysisResult {
    AnalysisSeries series;
    TrainOutcome outcome;
};

// A training run that, every probe_every steps, records one LandscapeSample
// and (from step 2 on) one GradPredSample comparing the gradients of that
// step and the step before, each computed on its own batch. Probing leaves
// training bit-identical to an uninstrumented run.
AnalysisResult run_analysis(Model &model, const LabeledImageSet &train_set,
                            const LabeledImageSet &val_set, const TrainConfig &train_cfg,
                            const AnalysisConfig &analysis_cfg);

// PerRun mode: one run per eta with lr = eta, each from a fresh model.
// Landscape sample t holds every run's training loss at step t; gradient
// predictiveness and the returned outcome come from the first run.
AnalysisResult run_lr_sweep(const std::function<Model()> &make_model,
                            const LabeledImageSet &train_set, const LabeledImageSet &val_set,
                            const TrainConfig &train_cfg, const AnalysisConfig &analysis_cfg);

} // namespace normlab
