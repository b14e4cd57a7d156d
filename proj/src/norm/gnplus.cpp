#include "normlab/norm/gnplus.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/simd/kernels.hpp"

#include <cmath>

namespace normlab {

double sigmoid_gate(double lambda) {
    if (lambda >= 0.0) return 1.0 / (1.0 + std::exp(-lambda));
    const double e = std::exp(lambda);
    return e / (1.0 + e);
}

Tensor4 affine_forward(const Tensor4 &z, const AffineParams &affine) {
    const Shape4 &s = z.shape();
    if (affine.gamma.size() != s.c || affine.beta.size() != s.c)
        throw ShapeError("affine parameters do not match input " + s.str());
    Tensor4 y(s);
    const auto &k = simd::active();
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            k.scale_shift(z.plane(n, c).data(), affine.gamma[c], affine.beta[c],
                          y.plane(n, c).data(), s.plane());
    return y;
}

AffineGrads affine_backward(const Tensor4 &z, const Tensor4 &dy,
                            std::span<const double> gamma) {
    const Shape4 &s = z.shape();
    if (dy.shape() != s || gamma.size() != s.c)
        throw ShapeError("affine_backward: shape mismatch");
    AffineGrads g{Tensor4(s), std::vector<double>(s.c), std::vector<double>(s.c)};
    const auto &k = simd::active();
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t n = 0; n < s.n; ++n) {
            const double *d = dy.plane(n, c).data();
            g.dgamma[c] += k.dot(d, z.plane(n, c).data(), s.plane());
            g.dbeta[c] += k.sum(d, s.plane());
            k.scale_shift(d, gamma[c], 0.0, g.dz.plane(n, c).data(), s.plane());
        }
    return g;
}

std::string_view variant_name(GNPlusVariant v) {
    switch (v) {
    case GNPlusVariant::GNFirst: return "GNPlusGNFirst";
    case GNPlusVariant::BNFirst: return "GNPlusBNFirst";
    case GNPlusVariant::Parallel: return "GNPlusParallel";
    }
    return "unknown";
}

GNPlusState::GNPlusState(GNPlusVariant v, std::size_t channels, std::size_t groups)
    : variant(v), gn{groups, 1e-5}, bn(channels), affine(channels) {}

GNPlusForward gnplus_forward(const Tensor4 &x, GNPlusState &state, bool update_running) {
    GNPlusCache cache;
    cache.variant = state.variant;
    cache.gate = sigmoid_gate(state.lambda);
    cache.gamma = state.affine.gamma;

    switch (state.variant) {
    case GNPlusVariant::GNFirst: {
        auto gn = gn_normalize(x, state.gn);
        auto bn = bn_normalize(gn.y, state.bn, update_running);
        cache.gn_out = std::move(gn.y);
        cache.bn_out = std::move(bn.y);
        cache.gn = std::move(gn.cache);
        cache.bn = std::move(bn.cache);
        break;
    }
    case GNPlusVariant::BNFirst: {
        auto bn = bn_normalize(x, state.bn, update_running);
        auto gn = gn_normalize(bn.y, state.gn);
        cache.gn_out = std::move(gn.y);
        cache.bn_out = std::move(bn.y);
        cache.gn = std::move(gn.cache);
        cache.bn = std::move(bn.cache);
        break;
    }
    case GNPlusVariant::Parallel: {
        auto gn = gn_normalize(x, state.gn);
        auto bn = bn_normalize(x, state.bn, update_running);
        cache.gn_out = std::move(gn.y);
        cache.bn_out = std::move(bn.y);
        cache.gn = std::move(gn.cache);
        cache.bn = std::move(bn.cache);
        break;
    }
    }

    const double s = cache.gate;
    cache.mixed = Tensor4(x.shape());
    simd::active().lincomb2(s, cache.gn_out.ptr(), 1.0 - s, cache.bn_out.ptr(), 0.0,
                            cache.mixed.ptr(), x.size());
    Tensor4 y = affine_forward(cache.mixed, state.affine);
    return {std::move(y), std::move(cache)};
}

GNPlusGrads gnplus_backward(const GNPlusCache &cache, const Tensor4 &dy) {
    if (cache.bn.mode != Mode::Train)
        throw UsageError("gnplus_backward needs a train-mode forward cache");

    AffineGrads aff = affine_backward(cache.mixed, dy, cache.gamma);
    const std::size_t count = dy.size();
    const auto &k = simd::active();
    const double s = cache.gate;

    GNPlusGrads g;
    g.dgamma = std::move(aff.dgamma);
    g.dbeta = std::move(aff.dbeta);

    // dL/dlambda = s (1 - s) * sum(dz * (gn_out - bn_out))
    std::vector<double> diff(count);
    k.lincomb2(1.0, cache.gn_out.ptr(), -1.0, cache.bn_out.ptr(), 0.0, diff.data(), count);
    g.dlambda = s * (1.0 - s) * k.dot(aff.dz.ptr(), diff.data(), count);

    Tensor4 d_gn(dy.shape()), d_bn(dy.shape());
    k.scale_shift(aff.dz.ptr(), s, 0.0, d_gn.ptr(), count);
    k.scale_shift(aff.dz.ptr(), 1.0 - s, 0.0, d_bn.ptr(), count);

    switch (cache.variant) {
    case GNPlusVariant::GNFirst: {
        // gn_out feeds the output directly and through the BN path.
        const Tensor4 via_bn = bn_backward(cache.bn, d_bn);
        k.axpy(1.0, via_bn.ptr(), d_gn.ptr(), count);
        g.dx = gn_backward(cache.gn, d_gn);
        break;
    }
    case GNPlusVariant::BNFirst: {
        const Tensor4 via_gn = gn_backward(cache.gn, d_gn);
        k.axpy(1.0, via_gn.ptr(), d_bn.ptr(), count);
        g.dx = bn_backward(cache.bn, d_bn);
        break;
    }
    case GNPlusVariant::Parallel: {
        g.dx = gn_backward(cache.gn, d_gn);
        const Tensor4 via_bn = bn_backward(cache.bn, d_bn);
        k.axpy(1.0, via_bn.ptr(), g.dx.ptr(), count);
        break;
    }
    }
    return g;
}

} // namespace normlab
