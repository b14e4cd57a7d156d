#include "normlab/norm/group_norm.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/core/ops.hpp"
#include "normlab/simd/kernels.hpp"

#include <cmath>

namespace normlab {

GnForward gn_normalize(const Tensor4 &x, const GroupNormConfig &cfg) {
    const GroupedView view(x, cfg.groups);
    if (view.group_size() < 2)
        throw DegenerateBatchError("group norm needs (C/G)*H*W >= 2, got " +
                                   x.shape().str() + " with G=" +
                                   std::to_string(cfg.groups));
    if (!(cfg.eps > 0.0)) throw ConfigError("group norm eps must be positive");

    const std::size_t n_groups = x.shape().n * cfg.groups;
    const std::size_t len = view.group_size();
    const MeanVar mv = reduce_mean_var(to_grouped(x, cfg.groups), {Axis::H, Axis::W});

    GnForward out{Tensor4(x.shape()), GnCache{Tensor4(), std::vector<double>(n_groups), cfg.groups}};
    const auto &k = simd::active();
    for (std::size_t i = 0; i < n_groups; ++i) {
        const double inv = 1.0 / std::sqrt(mv.var.data()[i] + cfg.eps);
        out.cache.inv_std[i] = inv;
        k.scale_shift(x.ptr() + i * len, inv, -mv.mean.data()[i] * inv,
                      out.y.ptr() + i * len, len);
    }
    out.cache.normalized = out.y;
    return out;
}

Tensor4 gn_backward(const GnCache &cache, const Tensor4 &dy) {
    const Shape4 &s = cache.normalized.shape();
    if (dy.shape() != s)
        throw ShapeError("gn_backward: gradient " + dy.shape().str() +
                         " does not match cached " + s.str());
    const GroupedView view(cache.normalized, cache.groups);
    const std::size_t n_groups = s.n * cache.groups;
    if (cache.inv_std.size() != n_groups) throw UsageError("gn_backward: malformed cache");

    const std::size_t len = view.group_size();
    const double inv_m = 1.0 / static_cast<double>(len);
    Tensor4 dx(s);
    const auto &k = simd::active();
    for (std::size_t i = 0; i < n_groups; ++i) {
        const double *g = dy.ptr() + i * len;
        const double *xh = cache.normalized.ptr() + i * len;
        const double sum_dy = k.sum(g, len);
        const double sum_dy_xhat = k.dot(g, xh, len);
        const double inv = cache.inv_std[i];
        k.lincomb2(inv, g, -inv * sum_dy_xhat * inv_m, xh, -inv * sum_dy * inv_m,
                   dx.ptr() + i * len, len);
    }
    return dx;
}

} // namespace normlab
