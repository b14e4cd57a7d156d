#include "normlab/net/conv.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace normlab {
namespace {

constexpr std::size_t kTaps = 9;

// col[(ci * 9 + ky * 3 + kx), oy * wo + ox] = x[ci, oy*s + ky - 1, ox*s + kx - 1]
void im2col(const double *x, std::size_t cin, std::size_t h, std::size_t w,
            std::size_t stride, std::size_t ho, std::size_t wo, double *col) {
    const std::size_t p = ho * wo;
    for (std::size_t ci = 0; ci < cin; ++ci)
        for (std::size_t ky = 0; ky < 3; ++ky)
            for (std::size_t kx = 0; kx < 3; ++kx) {
                double *row = col + (ci * kTaps + ky * 3 + kx) * p;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - 1;
                    double *dst = row + oy * wo;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                        std::fill(dst, dst + wo, 0.0);
                        continue;
                    }
                    const double *src = x + (ci * h + static_cast<std::size_t>(iy)) * w;
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - 1;
                        dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                                      ? 0.0
                                      : src[static_cast<std::size_t>(ix)];
                    }
                }
            }
}

void col2im_add(const double *col, std::size_t cin, std::size_t h, std::size_t w,
                std::size_t stride, std::size_t ho, std::size_t wo, double *dx) {
    const std::size_t p = ho * wo;
    for (std::size_t ci = 0; ci < cin; ++ci)
        for (std::size_t ky = 0; ky < 3; ++ky)
            for (std::size_t kx = 0; kx < 3; ++kx) {
                const double *row = col + (ci * kTaps + ky * 3 + kx) * p;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - 1;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    double *dst = dx + (ci * h + static_cast<std::size_t>(iy)) * w;
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - 1;
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                        dst[static_cast<std::size_t>(ix)] += row[oy * wo + ox];
                    }
                }
            }
}

void check_weight(const Tensor4 &x, const Tensor4 &weight, std::size_t bias_size,
                  std::size_t stride) {
    const Shape4 &ws = weight.shape();
    if (ws.h != 3 || ws.w != 3 || ws.c != x.shape().c || bias_size != ws.n)
        throw ShapeError("conv3x3: input " + x.shape().str() + " incompatible with weight " +
                         ws.str() + " and bias of " + std::to_string(bias_size));
    if (stride != 1 && stride != 2) throw ConfigError("conv3x3: stride must be 1 or 2");
    if (x.shape().plane() == 0) throw ShapeError("conv3x3: empty spatial extent");
}

} // namespace

std::size_t conv3x3_output_extent(std::size_t extent, std::size_t stride) {
    return (extent - 1) / stride + 1;
}

ConvForward conv3x3_forward(const Tensor4 &x, const Tensor4 &weight,
                            std::span<const double> bias, std::size_t stride) {
    check_weight(x, weight, bias.size(), stride);
    const Shape4 &s = x.shape();
    const std::size_t cout = weight.shape().n;
    const std::size_t ho = conv3x3_output_extent(s.h, stride);
    const std::size_t wo = conv3x3_output_extent(s.w, stride);
    const std::size_t p = ho * wo;
    const std::size_t kdim = s.c * kTaps;

    ConvForward out{Tensor4({s.n, cout, ho, wo}), ConvCache{x, weight, stride, {s.n, cout, ho, wo}}};
    std::vector<double> col(kdim * p);
    const auto &k = simd::active();
    for (std::size_t n = 0; n < s.n; ++n) {
        im2col(x.ptr() + n * s.c * s.plane(), s.c, s.h, s.w, stride, ho, wo, col.data());
        double *yn = out.y.ptr() + n * cout * p;
        for (std::size_t co = 0; co < cout; ++co) std::fill(yn + co * p, yn + (co + 1) * p, bias[co]);
        k.gemm_acc(cout, p, kdim, weight.ptr(), kdim, 1, col.data(), p, yn, p);
    }
    return out;
}

ConvGrads conv3x3_backward(const ConvCache &cache, const Tensor4 &dy) {
    if (dy.shape() != cache.output_shape)
        throw ShapeError("conv3x3_backward: gradient " + dy.shape().str() + " expected " +
                         cache.output_shape.str());
    const Shape4 &s = cache.input.shape();
    const std::size_t cout = cache.weight.shape().n;
    const std::size_t ho = cache.output_shape.h, wo = cache.output_shape.w;
    const std::size_t p = ho * wo;
    const std::size_t kdim = s.c * kTaps;

    ConvGrads g{Tensor4(s), Tensor4(cache.weight.shape()), std::vector<double>(cout, 0.0)};
    std::vector<double> col(kdim * p), dcol(kdim * p);
    const auto &k = simd::active();
    for (std::size_t n = 0; n < s.n; ++n) {
        const double *dyn = dy.ptr() + n * cout * p;
        im2col(cache.input.ptr() + n * s.c * s.plane(), s.c, s.h, s.w, cache.stride, ho, wo,
               col.data());
        // dW += dY_n * col^T
        k.gemm_nt_acc(cout, kdim, p, dyn, p, col.data(), p, g.dweight.ptr(), kdim);
        for (std::size_t co = 0; co < cout; ++co) g.dbias[co] += k.sum(dyn + co * p, p);
        // dcol = W^T * dY_n
        std::fill(dcol.begin(), dcol.end(), 0.0);
        k.gemm_acc(kdim, p, cout, cache.weight.ptr(), 1, kdim, dyn, p, dcol.data(), p);
        col2im_add(dcol.data(), s.c, s.h, s.w, cache.stride, ho, wo,
                   g.dx.ptr() + n * s.c * s.plane());
    }
    return g;
}

Conv3x3Layer::Conv3x3Layer(std::size_t in_channels, std::size_t out_channels,
                           std::size_t stride, Rng &init)
    : stride_(stride), weight_({out_channels, in_channels, 3, 3}), dweight_(weight_.shape()),
      bias_(out_channels, 0.0), dbias_(out_channels, 0.0) {
    if (stride != 1 && stride != 2) throw ConfigError("conv3x3: stride must be 1 or 2");
    const double std = std::sqrt(2.0 / static_cast<double>(in_channels * kTaps));
    for (double &w : weight_.data()) w = init.normal(0.0, std);
}

Tensor4 Conv3x3Layer::forward(const Tensor4 &x, const ForwardContext &) {
    ConvForward f = conv3x3_forward(x, weight_, bias_, stride_);
    cache_ = std::move(f.cache);
    return std::move(f.y);
}

Tensor4 Conv3x3Layer::backward(const Tensor4 &dy) {
    ConvGrads g = conv3x3_backward(cache_, dy);
    // Copy into place: ParamRef spans alias these buffers.
    std::ranges::copy(g.dweight.data(), dweight_.data().begin());
    std::ranges::copy(g.dbias, dbias_.begin());
    return std::move(g.dx);
}

void Conv3x3Layer::collect_params(std::vector<ParamRef> &out, const std::string &prefix) {
    out.push_back({prefix + "weight", weight_.data(), dweight_.data(), ParamKind::Weight,
                   {weight_.shape().n, weight_.shape().c, weight_.shape().h, weight_.shape().w}});
    out.push_back({prefix + "bias", bias_, dbias_, ParamKind::Bias, {bias_.size()}});
}

} // namespace normlab
