#include "normlab/net/optimizer.hpp"

#include "normlab/core/errors.hpp"

#include <cmath>

namespace normlab {

void OptimizerConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("Adam betas must be in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i].epoch <= schedule[i - 1].epoch)
            throw ConfigError("learning-rate schedule epochs must be strictly increasing");
    for (const auto &s : schedule)
        if (!(s.multiplier > 0.0)) throw ConfigError("schedule multipliers must be positive");
}

double OptimizerConfig::lr_at(std::size_t epoch) const {
    double r = lr;
    for (const auto &s : schedule)
        if (epoch >= s.epoch) r *= s.multiplier;
    return r;
}

double batch_scaled_lr(std::size_t batch_size) {
    return 0.1 * (static_cast<double>(batch_size) / 128.0);
}

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(std::move(cfg)) {}

bool Optimizer::decays(const ParamRef &p) const {
    if (cfg_.weight_decay == 0.0) return false;
    if (p.kind == ParamKind::NormAffine || p.kind == ParamKind::Gate) return cfg_.decay_norm_params;
    return true;
}

void Optimizer::step(std::span<const ParamRef> params, double lr) {
    if (first_.empty()) {
        for (const auto &p : params) {
            first_.emplace_back(p.value.size(), 0.0);
            if (cfg_.kind == OptimizerKind::Adam) second_.emplace_back(p.value.size(), 0.0);
        }
    }
    if (first_.size() != params.size())
        throw UsageError("optimizer step called with a different parameter list");
    ++steps_;

    const double t = static_cast<double>(steps_);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        const ParamRef &p = params[i];
        const double wd = decays(p) ? cfg_.weight_decay : 0.0;
        auto &m = first_[i];
        if (m.size() != p.value.size()) throw UsageError("optimizer: parameter size changed");
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad[j] + wd * p.value[j];
            if (cfg_.kind == OptimizerKind::SgdMomentum) {
                m[j] = cfg_.momentum * m[j] + g;
                p.value[j] -= lr * m[j];
            } else {
                auto &v = second_[i];
                m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
                v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = m[j] / bc1;
                const double vhat = v[j] / bc2;
                p.value[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
            }
        }
    }
}

} // namespace normlab
