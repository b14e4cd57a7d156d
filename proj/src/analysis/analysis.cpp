#include "normlab/analysis/analysis.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/net/loss.hpp"
#include "normlab/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace normlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void finish(LandscapeSample &s) {
    s.loss_min = *std::min_element(s.losses.begin(), s.losses.end());
    s.loss_max = *std::max_element(s.losses.begin(), s.losses.end());
}

} // namespace

void AnalysisConfig::validate() const {
    if (eta_grid.empty()) throw ConfigError("eta grid must not be empty");
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
        if (!(eta_grid[i] > 0.0)) throw ConfigError("eta grid values must be positive");
        if (i > 0 && !(eta_grid[i] > eta_grid[i - 1]))
            throw ConfigError("eta grid must be strictly ascending");
    }
}

double ModelObjective::loss() {
    const Tensor4 logits = model_.forward(batch_.images, ForwardContext::probe());
    return cross_entropy(logits, batch_.labels).loss;
}

LandscapeSample landscape_probe(ProbeObjective &objective, std::span<const double> gradient,
                                std::span<const double> etas, std::size_t step) {
    const std::vector<double> theta = objective.get();
    if (gradient.size() != theta.size())
        throw UsageError("landscape_probe: gradient has " + std::to_string(gradient.size()) +
                         " entries, parameters have " + std::to_string(theta.size()));
    if (etas.empty()) throw UsageError("landscape_probe: no step sizes");

    LandscapeSample s;
    s.step = step;
    std::vector<double> moved(theta.size());
    for (double eta : etas) {
        for (std::size_t i = 0; i < theta.size(); ++i) moved[i] = theta[i] - eta * gradient[i];
        objective.set(moved);
        double l = objective.loss();
        if (!std::isfinite(l)) {
            l = kInf;
            s.flagged = true;
        }
        s.losses.push_back(l);
    }
    objective.set(theta);
    finish(s);
    return s;
}

double gradient_predictiveness(std::span<const double> current, std::span<const double> previous) {
    if (current.size() != previous.size())
        throw UsageError("gradient_predictiveness: lengths " + std::to_string(current.size()) +
                         " and " + std::to_string(previous.size()) + " differ");
    return std::sqrt(simd::active().sum_sq_diff(current.data(), previous.data(), current.size()));
}

AnalysisResult run_analysis(Model &model, const LabeledImageSet &train_set,
                            const LabeledImageSet &val_set, const TrainConfig &train_cfg,
                            const AnalysisConfig &analysis_cfg) {
    analysis_cfg.validate();
    AnalysisResult r;
    r.series.etas = analysis_cfg.eta_grid;
    std::vector<double> previous;

    const StepObserver observer = [&](const StepEvent &ev) {
        const bool probe = analysis_cfg.probe_every != 0 && ev.step % analysis_cfg.probe_every == 0;
        const bool need_grad = probe || (analysis_cfg.probe_every != 0 &&
                                         (ev.step + 1) % analysis_cfg.probe_every == 0);
        if (!need_grad) {
            previous.clear();
            return;
        }
        std::vector<double> grad = ev.model.flat_grads();
        if (probe) {
            if (ev.step >= 2 && !previous.empty())
                r.series.gradpred.push_back({ev.step, gradient_predictiveness(grad, previous)});
            ModelObjective objective(ev.model, ev.batch);
            r.series.landscape.push_back(
                landscape_probe(objective, grad, analysis_cfg.eta_grid, ev.step));
        }
        previous = std::move(grad);
    };

    r.outcome = train(model, train_set, val_set, train_cfg, observer);
    return r;
}

AnalysisResult run_lr_sweep(const std::function<Model()> &make_model,
                            const LabeledImageSet &train_set, const LabeledImageSet &val_set,
                            const TrainConfig &train_cfg, const AnalysisConfig &analysis_cfg) {
    analysis_cfg.validate();
    AnalysisResult r;
    r.series.etas = analysis_cfg.eta_grid;
    const std::size_t runs = analysis_cfg.eta_grid.size();
    std::map<std::size_t, LandscapeSample> by_step;

    for (std::size_t j = 0; j < runs; ++j) {
        TrainConfig cfg = train_cfg;
        cfg.optimizer.lr = analysis_cfg.eta_grid[j];
        Model model = make_model();

        std::vector<double> previous;
        const StepObserver observer = [&](const StepEvent &ev) {
            const bool probe = analysis_cfg.probe_every != 0 && ev.step % analysis_cfg.probe_every == 0;
            if (probe) {
                auto &s = by_step[ev.step];
                if (s.losses.empty()) {
                    s.step = ev.step;
                    s.losses.assign(runs, kInf);
                }
                s.losses[j] = std::isfinite(ev.loss) ? ev.loss : kInf;
            }
            if (j != 0) return;
            std::vector<double> grad = ev.model.flat_grads();
            if (probe && ev.step >= 2 && !previous.empty())
                r.series.gradpred.push_back({ev.step, gradient_predictiveness(grad, previous)});
            previous = std::move(grad);
        };
        TrainOutcome outcome = train(model, train_set, val_set, cfg, observer);
        if (j == 0) r.outcome = std::move(outcome);
    }
    for (auto &[step, s] : by_step) {
        s.flagged = std::any_of(s.losses.begin(), s.losses.end(),
                                [](double l) { return !std::isfinite(l); });
        finish(s);
        r.series.landscape.push_back(std::move(s));
    }
    return r;
}

} // namespace normlab
