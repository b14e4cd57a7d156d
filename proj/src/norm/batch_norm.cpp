#include "normlab/norm/batch_norm.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/core/ops.hpp"
#include "normlab/simd/kernels.hpp"

#include <cmath>

namespace normlab {

BatchNormState::BatchNormState(std::size_t channels)
    : running_mean(channels, 0.0), running_var(channels, 1.0) {}

BnForward bn_normalize(const Tensor4 &x, BatchNormState &state, bool update_running) {
    const Shape4 &s = x.shape();
    if (s.c != state.channels())
        throw ShapeError("batch norm configured for " + std::to_string(state.channels()) +
                         " channels, input is " + s.str());
    if (!(state.eps > 0.0)) throw ConfigError("batch norm eps must be positive");

    BnForward out{Tensor4(s), BnCache{Tensor4(), std::vector<double>(s.c), state.mode}};
    std::vector<double> mean(s.c);

    if (state.mode == Mode::Train) {
        if (s.n * s.plane() < 2)
            throw DegenerateBatchError("batch norm needs N*H*W >= 2 in train mode, got " +
                                       s.str());
        const MeanVar mv = reduce_mean_var(x, {Axis::N, Axis::H, Axis::W});
        for (std::size_t c = 0; c < s.c; ++c) {
            mean[c] = mv.mean.data()[c];
            const double var = mv.var.data()[c];
            out.cache.inv_std[c] = 1.0 / std::sqrt(var + state.eps);
            if (update_running) {
                const double m = state.momentum;
                state.running_mean[c] = (1.0 - m) * state.running_mean[c] + m * mean[c];
                state.running_var[c] = (1.0 - m) * state.running_var[c] + m * var;
            }
        }
    } else {
        for (std::size_t c = 0; c < s.c; ++c) {
            mean[c] = state.running_mean[c];
            out.cache.inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
        }
    }

    const auto &k = simd::active();
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c) {
            const double inv = out.cache.inv_std[c];
            k.scale_shift(x.plane(n, c).data(), inv, -mean[c] * inv,
                          out.y.plane(n, c).data(), s.plane());
        }
    out.cache.normalized = out.y;
    return out;
}

Tensor4 bn_backward(const BnCache &cache, const Tensor4 &dy) {
    const Shape4 &s = cache.normalized.shape();
    if (dy.shape() != s)
        throw ShapeError("bn_backward: gradient " + dy.shape().str() +
                         " does not match cached " + s.str());
    if (cache.inv_std.size() != s.c) throw UsageError("bn_backward: malformed cache");

    Tensor4 dx(s);
    const auto &k = simd::active();
    if (cache.mode == Mode::Eval) {
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t c = 0; c < s.c; ++c)
                k.scale_shift(dy.plane(n, c).data(), cache.inv_std[c], 0.0,
                              dx.plane(n, c).data(), s.plane());
        return dx;
    }

    // dx = inv_std * (dy - mean(dy) - xhat * mean(dy * xhat))
    const double inv_m = 1.0 / static_cast<double>(s.n * s.plane());
    for (std::size_t c = 0; c < s.c; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < s.n; ++n) {
            sum_dy += k.sum(dy.plane(n, c).data(), s.plane());
            sum_dy_xhat += k.dot(dy.plane(n, c).data(),
                                 cache.normalized.plane(n, c).data(), s.plane());
        }
        const double inv = cache.inv_std[c];
        for (std::size_t n = 0; n < s.n; ++n)
            k.lincomb2(inv, dy.plane(n, c).data(), -inv * sum_dy_xhat * inv_m,
                       cache.normalized.plane(n, c).data(), -inv * sum_dy * inv_m,
                       dx.plane(n, c).data(), s.plane());
    }
    return dx;
}

} // namespace normlab
