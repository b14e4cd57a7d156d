#include "normlab/net/layers.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace normlab {

Tensor4 relu_forward(const Tensor4 &x) {
    Tensor4 y(x.shape());
    const double *src = x.ptr();
    double *dst = y.ptr();
    for (std::size_t i = 0; i < x.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
    return y;
}

Tensor4 relu_backward(const Tensor4 &x, const Tensor4 &dy) {
    if (x.shape() != dy.shape()) throw ShapeError("relu_backward: shape mismatch");
    Tensor4 dx(x.shape());
    const double *src = x.ptr();
    const double *g = dy.ptr();
    double *dst = dx.ptr();
    for (std::size_t i = 0; i < x.size(); ++i) dst[i] = src[i] > 0.0 ? g[i] : 0.0;
    return dx;
}

Tensor4 global_avg_pool_forward(const Tensor4 &x) {
    const Shape4 &s = x.shape();
    if (s.plane() == 0) throw ShapeError("global_avg_pool: empty spatial extent");
    Tensor4 y({s.n, s.c, 1, 1});
    const auto &k = simd::active();
    const double inv = 1.0 / static_cast<double>(s.plane());
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            y(n, c, 0, 0) = k.sum(x.plane(n, c).data(), s.plane()) * inv;
    return y;
}

Tensor4 global_avg_pool_backward(const Shape4 &input_shape, const Tensor4 &dy) {
    const Shape4 &s = input_shape;
    if (dy.shape() != Shape4{s.n, s.c, 1, 1})
        throw ShapeError("global_avg_pool_backward: gradient " + dy.shape().str() +
                         " does not match input " + s.str());
    Tensor4 dx(s);
    const double inv = 1.0 / static_cast<double>(s.plane());
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c) {
            const double v = dy(n, c, 0, 0) * inv;
            for (double &d : dx.plane(n, c)) d = v;
        }
    return dx;
}

Tensor4 linear_forward(const Tensor4 &x, const Tensor4 &weight, std::span<const double> bias) {
    const std::size_t batch = x.shape().n;
    const std::size_t in = x.shape().c * x.shape().plane();
    const std::size_t out = weight.shape().n;
    if (weight.shape().c * weight.shape().plane() != in || bias.size() != out)
        throw ShapeError("linear: input " + x.shape().str() + " incompatible with weight " +
                         weight.shape().str());
    Tensor4 y({batch, out, 1, 1});
    for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t o = 0; o < out; ++o) y(n, o, 0, 0) = bias[o];
    simd::active().gemm_nt_acc(batch, out, in, x.ptr(), in, weight.ptr(), in, y.ptr(), out);
    return y;
}

LinearGrads linear_backward(const Tensor4 &x, const Tensor4 &weight, const Tensor4 &dy) {
    const std::size_t batch = x.shape().n;
    const std::size_t in = x.shape().c * x.shape().plane();
    const std::size_t out = weight.shape().n;
    if (dy.shape() != Shape4{batch, out, 1, 1})
        throw ShapeError("linear_backward: gradient shape " + dy.shape().str());
    const auto &k = simd::active();
    LinearGrads g{Tensor4(x.shape()), Tensor4(weight.shape()), std::vector<double>(out, 0.0)};
    // dW[o, i] = sum_n dy[n, o] x[n, i];   dx[n, i] = sum_o dy[n, o] W[o, i]
    k.gemm_acc(out, in, batch, dy.ptr(), 1, out, x.ptr(), in, g.dweight.ptr(), in);
    k.gemm_acc(batch, in, out, dy.ptr(), out, 1, weight.ptr(), in, g.dx.ptr(), in);
    for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t o = 0; o < out; ++o) g.dbias[o] += dy(n, o, 0, 0);
    return g;
}

Tensor4 noise_inject(const Tensor4 &y, double mu, double sigma, Rng &rng) {
    if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
    Tensor4 out(y.shape());
    const double *src = y.ptr();
    double *dst = out.ptr();
    if (sigma == 0.0) {
        for (std::size_t i = 0; i < y.size(); ++i) dst[i] = src[i] + mu;
    } else {
        for (std::size_t i = 0; i < y.size(); ++i) dst[i] = src[i] + rng.normal(mu, sigma);
    }
    return out;
}

// ---- layers -----------------------------------------------------------------

Tensor4 ReluLayer::forward(const Tensor4 &x, const ForwardContext &) {
    input_ = x;
    return relu_forward(x);
}

Tensor4 ReluLayer::backward(const Tensor4 &dy) { return relu_backward(input_, dy); }

Tensor4 GlobalAvgPoolLayer::forward(const Tensor4 &x, const ForwardContext &) {
    input_shape_ = x.shape();
    return global_avg_pool_forward(x);
}

Tensor4 GlobalAvgPoolLayer::backward(const Tensor4 &dy) {
    return global_avg_pool_backward(input_shape_, dy);
}

LinearLayer::LinearLayer(std::size_t in_features, std::size_t out_features, Rng &init)
    : weight_({out_features, in_features, 1, 1}), dweight_(weight_.shape()),
      bias_(out_features, 0.0), dbias_(out_features, 0.0) {
    const double std = std::sqrt(1.0 / static_cast<double>(in_features));
    for (double &w : weight_.data()) w = init.normal(0.0, std);
}

Tensor4 LinearLayer::forward(const Tensor4 &x, const ForwardContext &) {
    input_ = x;
    return linear_forward(x, weight_, bias_);
}

Tensor4 LinearLayer::backward(const Tensor4 &dy) {
    LinearGrads g = linear_backward(input_, weight_, dy);
    std::ranges::copy(g.dweight.data(), dweight_.data().begin());
    std::ranges::copy(g.dbias, dbias_.begin());
    return std::move(g.dx);
}

void LinearLayer::collect_params(std::vector<ParamRef> &out, const std::string &prefix) {
    out.push_back({prefix + "weight", weight_.data(), dweight_.data(), ParamKind::Weight,
                   {weight_.shape().n, weight_.shape().c, weight_.shape().h, weight_.shape().w}});
    out.push_back({prefix + "bias", bias_, dbias_, ParamKind::Bias, {bias_.size()}});
}

std::string_view norm_kind_name(NormKind k) {
    switch (k) {
    case NormKind::BatchNorm: return "BN";
    case NormKind::GroupNorm: return "GN";
    case NormKind::GNPlusGNFirst: return "GNPlusGNFirst";
    case NormKind::GNPlusBNFirst: return "GNPlusBNFirst";
    case NormKind::GNPlusParallel: return "GNPlusParallel";
    }
    return "unknown";
}

NormKind parse_norm_kind(std::string_view name) {
    if (name == "BN" || name == "bn") return NormKind::BatchNorm;
    if (name == "GN" || name == "gn") return NormKind::GroupNorm;
    if (name == "GNPlusGNFirst" || name == "gnfirst") return NormKind::GNPlusGNFirst;
    if (name == "GNPlusBNFirst" || name == "bnfirst") return NormKind::GNPlusBNFirst;
    if (name == "GNPlusParallel" || name == "parallel") return NormKind::GNPlusParallel;
    throw ConfigError("unknown normalization variant '" + std::string(name) + "'");
}

bool is_gnplus(NormKind k) {
    return k == NormKind::GNPlusGNFirst || k == NormKind::GNPlusBNFirst ||
           k == NormKind::GNPlusParallel;
}

namespace {

GNPlusVariant to_variant(NormKind k) {
    switch (k) {
    case NormKind::GNPlusBNFirst: return GNPlusVariant::BNFirst;
    case NormKind::GNPlusParallel: return GNPlusVariant::Parallel;
    default: return GNPlusVariant::GNFirst;
    }
}

} // namespace

NormLayer::NormLayer(NormKind kind, std::size_t channels, std::size_t groups)
    : kind_(kind), state_(to_variant(kind), channels, groups), dgamma_(channels, 0.0),
      dbeta_(channels, 0.0) {
    if (kind != NormKind::BatchNorm) {
        if (groups == 0 || channels % groups != 0)
            throw ConfigError("group norm: " + std::to_string(channels) +
                              " channels are not divisible into " + std::to_string(groups) +
                              " groups");
    }
}

Tensor4 NormLayer::forward(const Tensor4 &x, const ForwardContext &ctx) {
    state_.bn.mode = ctx.train ? Mode::Train : Mode::Eval;
    const bool update = ctx.train && ctx.update_running_stats;
    gated_.reset();
    bn_.reset();
    gn_.reset();
    switch (kind_) {
    case NormKind::BatchNorm: {
        BnForward f = bn_normalize(x, state_.bn, update);
        normalized_ = std::move(f.y);
        bn_ = std::move(f.cache);
        return affine_forward(normalized_, state_.affine);
    }
    case NormKind::GroupNorm: {
        GnForward f = gn_normalize(x, state_.gn);
        normalized_ = std::move(f.y);
        gn_ = std::move(f.cache);
        return affine_forward(normalized_, state_.affine);
    }
    default: {
        GNPlusForward f = gnplus_forward(x, state_, update);
        gated_ = std::move(f.cache);
        return std::move(f.y);
    }
    }
}

Tensor4 NormLayer::backward(const Tensor4 &dy) {
    if (gated_) {
        GNPlusGrads g = gnplus_backward(*gated_, dy);
        std::ranges::copy(g.dgamma, dgamma_.begin());
        std::ranges::copy(g.dbeta, dbeta_.begin());
        dlambda_ = g.dlambda;
        return std::move(g.dx);
    }
    if (!bn_ && !gn_) throw UsageError("norm layer backward called before forward");
    AffineGrads a = affine_backward(normalized_, dy, state_.affine.gamma);
    std::ranges::copy(a.dgamma, dgamma_.begin());
    std::ranges::copy(a.dbeta, dbeta_.begin());
    return bn_ ? bn_backward(*bn_, a.dz) : gn_backward(*gn_, a.dz);
}

void NormLayer::collect_params(std::vector<ParamRef> &out, const std::string &prefix) {
    out.push_back({prefix + "gamma", state_.affine.gamma, dgamma_, ParamKind::NormAffine,
                   {dgamma_.size()}});
    out.push_back({prefix + "beta", state_.affine.beta, dbeta_, ParamKind::NormAffine,
                   {dbeta_.size()}});
    if (is_gnplus(kind_))
        out.push_back({prefix + "lambda", std::span<double>(&state_.lambda, 1),
                       std::span<double>(&dlambda_, 1), ParamKind::Gate, {1}});
}

void NormLayer::collect_buffers(std::vector<BufferRef> &out, const std::string &prefix) {
    if (kind_ == NormKind::GroupNorm) return;
    out.push_back({prefix + "running_mean", state_.bn.running_mean});
    out.push_back({prefix + "running_var", state_.bn.running_var});
}

NoiseHookLayer::NoiseHookLayer(double mu, double sigma, std::uint64_t seed)
    : mu_(mu), sigma_(sigma), rng_(seed) {
    if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
}

Tensor4 NoiseHookLayer::forward(const Tensor4 &x, const ForwardContext &ctx) {
    if (!ctx.train || !ctx.inject_noise) return x;
    return noise_inject(x, mu_, sigma_, rng_);
}

} // namespace normlab
