#include "normlab/net/trainer.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/net/loss.hpp"
#include "normlab/simd/kernels.hpp"

#include <cmath>

namespace normlab {
namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kAugmentStream = 2;

void augment(Batch &batch, const TrainConfig &cfg, Rng &rng) {
    const Shape4 s = batch.images.shape();
    const Tensor4 src = batch.images;
    for (std::size_t n = 0; n < s.n; ++n) {
        const bool flip = cfg.augment_flip && rng.uniform() < 0.5;
        long dy = 0, dx = 0;
        if (cfg.augment_crop) {
            dy = static_cast<long>(rng.below(9)) - 4;
            dx = static_cast<long>(rng.below(9)) - 4;
        }
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t y = 0; y < s.h; ++y)
                for (std::size_t x = 0; x < s.w; ++x) {
                    const long sy = static_cast<long>(y) + dy;
                    long sx = static_cast<long>(x) + dx;
                    if (flip) sx = static_cast<long>(s.w) - 1 - sx;
                    const bool inside = sy >= 0 && sy < static_cast<long>(s.h) && sx >= 0 &&
                                        sx < static_cast<long>(s.w);
                    batch.images(n, c, y, x) =
                        inside ? src(n, c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx)) : 0.0;
                }
    }
}

double grad_norm(Model &model) {
    const auto &k = simd::active();
    double sq = 0.0;
    for (const auto &p : model.params()) sq += k.dot(p.grad.data(), p.grad.data(), p.grad.size());
    return std::sqrt(sq);
}

} // namespace

std::string_view divergence_name(Divergence d) {
    switch (d) {
    case Divergence::None: return "none";
    case Divergence::GradientVanish: return "gradient_vanish";
    case Divergence::GradientExplode: return "gradient_explode";
    }
    return "unknown";
}

EvalResult evaluate(Model &model, const LabeledImageSet &set, std::size_t batch_size) {
    if (set.size() == 0) throw InputError("cannot evaluate on an empty set");
    BatchIterator it(set, batch_size, IterMode::Eval);
    Batch b;
    double loss = 0.0;
    std::size_t correct = 0;
    while (it.next(b)) {
        const Tensor4 logits = model.forward(b.images, ForwardContext::evaluation());
        const CrossEntropyResult r = cross_entropy(logits, b.labels);
        loss += r.loss * static_cast<double>(b.labels.size());
        correct += r.correct;
    }
    const double n = static_cast<double>(set.size());
    return {loss / n, static_cast<double>(correct) / n};
}

double loss_and_gradients(Model &model, const Batch &batch, const ForwardContext &ctx,
                          std::size_t *correct) {
    const Tensor4 logits = model.forward(batch.images, ctx);
    const CrossEntropyResult r = cross_entropy(logits, batch.labels);
    model.backward(r.dlogits);
    if (correct) *correct = r.correct;
    return r.loss;
}

TrainOutcome train(Model &model, const LabeledImageSet &train_set,
                   const LabeledImageSet &val_set, const TrainConfig &cfg,
                   const StepObserver &observer) {
    cfg.optimizer.validate();
    if (cfg.batch_size == 0) throw ConfigError("batch size must be at least 1");
    if (train_set.size() < cfg.batch_size)
        throw InputError("training set of " + std::to_string(train_set.size()) +
                         " samples yields no full batch of " + std::to_string(cfg.batch_size));
    if (val_set.size() == 0) throw InputError("validation set is empty");

    TrainOutcome out;
    out.lambda_names = model.lambda_names();
    Optimizer opt(cfg.optimizer);
    const auto params = model.params();
    std::size_t explode_run = 0, vanish_run = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.optimizer.lr_at(epoch);
        BatchIterator it(train_set, cfg.batch_size, IterMode::Train,
                         mix_seed(cfg.seed, kShuffleStream), epoch);
        Rng aug_rng(mix_seed(mix_seed(cfg.seed, kAugmentStream), epoch));
        Batch batch;
        double loss_sum = 0.0;
        std::size_t correct_sum = 0, seen = 0;

        while (it.next(batch)) {
            if (cfg.augment_flip || cfg.augment_crop) augment(batch, cfg, aug_rng);
            std::size_t correct = 0;
            const double loss = loss_and_gradients(model, batch, ForwardContext::training(), &correct);
            const double gnorm = grad_norm(model);
            ++out.steps;

            Divergence flag = Divergence::None;
            if (!std::isfinite(loss) || !std::isfinite(gnorm)) {
                flag = Divergence::GradientExplode;
            } else {
                explode_run = (std::abs(loss) > cfg.divergence.max_loss ||
                               gnorm > cfg.divergence.explode_grad_norm)
                                  ? explode_run + 1
                                  : 0;
                vanish_run = gnorm < cfg.divergence.vanish_grad_norm ? vanish_run + 1 : 0;
                if (explode_run >= cfg.divergence.patience) flag = Divergence::GradientExplode;
                else if (vanish_run >= cfg.divergence.patience) flag = Divergence::GradientVanish;
            }
            if (flag != Divergence::None) {
                out.divergence = flag;
                out.divergence_epoch = epoch;
                out.divergence_step = out.steps;
                out.final_lambdas = model.lambdas();
                return out;
            }

            if (observer) observer(StepEvent{out.steps, epoch, model, batch, loss, gnorm});
            opt.step(params, lr);

            loss_sum += loss * static_cast<double>(batch.labels.size());
            correct_sum += correct;
            seen += batch.labels.size();
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.train_loss = loss_sum / static_cast<double>(seen);
        rec.train_acc = static_cast<double>(correct_sum) / static_cast<double>(seen);
        const EvalResult val = evaluate(model, val_set, cfg.eval_batch_size);
        rec.val_loss = val.loss;
        rec.val_acc = val.accuracy;
        rec.lambdas = model.lambdas();
        if (!std::isfinite(rec.val_loss)) {
            out.divergence = Divergence::GradientExplode;
            out.divergence_epoch = epoch;
            out.divergence_step = out.steps;
            out.final_lambdas = model.lambdas();
            return out;
        }
        out.epochs.push_back(std::move(rec));
    }
    out.final_lambdas = model.lambdas();
    return out;
}

} // namespace normlab
