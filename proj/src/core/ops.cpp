#include "normlab/core/ops.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/simd/kernels.hpp"

namespace normlab {
namespace {

// Maps an input coordinate to its slot in a tensor of shape `out` where
// extent-1 axes broadcast.
struct BroadcastIndex {
    Shape4 out;
    std::size_t operator()(std::size_t n, std::size_t c, std::size_t h,
                           std::size_t w) const {
        const std::size_t bn = out.n == 1 ? 0 : n;
        const std::size_t bc = out.c == 1 ? 0 : c;
        const std::size_t bh = out.h == 1 ? 0 : h;
        const std::size_t bw = out.w == 1 ? 0 : w;
        return ((bn * out.c + bc) * out.h + bh) * out.w + bw;
    }
};

} // namespace

MeanVar reduce_mean_var(const Tensor4 &x, const AxisSet &axes) {
    const Shape4 &s = x.shape();
    const std::size_t count = axes.extent(s);
    if (x.empty() || count == 0)
        throw ShapeError("reduce_mean_var: empty reduction over shape " + s.str());

    const Shape4 rs = axes.reduced_shape(s);
    const BroadcastIndex at{rs};
    MeanVar out{Tensor4(rs), Tensor4(rs)};
    double *mean = out.mean.ptr();
    double *var = out.var.ptr();
    const auto &k = simd::active();
    const double inv = 1.0 / static_cast<double>(count);

    if (axes.contains(Axis::H) && axes.contains(Axis::W)) {
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t c = 0; c < s.c; ++c)
                mean[at(n, c, 0, 0)] += k.sum(x.plane(n, c).data(), s.plane());
        for (double &m : out.mean.data()) m *= inv;
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t c = 0; c < s.c; ++c) {
                const std::size_t o = at(n, c, 0, 0);
                var[o] += k.sum_sq_dev(x.plane(n, c).data(), s.plane(), mean[o]);
            }
    } else {
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t c = 0; c < s.c; ++c)
                for (std::size_t h = 0; h < s.h; ++h)
                    for (std::size_t w = 0; w < s.w; ++w)
                        mean[at(n, c, h, w)] += x(n, c, h, w);
        for (double &m : out.mean.data()) m *= inv;
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t c = 0; c < s.c; ++c)
                for (std::size_t h = 0; h < s.h; ++h)
                    for (std::size_t w = 0; w < s.w; ++w) {
                        const std::size_t o = at(n, c, h, w);
                        const double d = x(n, c, h, w) - mean[o];
                        var[o] += d * d;
                    }
    }
    for (double &v : out.var.data()) v *= inv;
    return out;
}

Tensor4 broadcast_apply(const Tensor4 &x, const Tensor4 &stat, BroadcastOp op) {
    const Shape4 &s = x.shape();
    const Shape4 &t = stat.shape();
    auto fits = [](std::size_t a, std::size_t b) { return b == a || b == 1; };
    if (!fits(s.n, t.n) || !fits(s.c, t.c) || !fits(s.h, t.h) || !fits(s.w, t.w))
        throw ShapeError("cannot broadcast " + t.str() + " onto " + s.str());

    Tensor4 y(s);
    const BroadcastIndex at{t};
    const double *sp = stat.ptr();

    if (t.h == 1 && t.w == 1 && op != BroadcastOp::Div) {
        const auto &k = simd::active();
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t c = 0; c < s.c; ++c) {
                const double v = sp[at(n, c, 0, 0)];
                const double *src = x.plane(n, c).data();
                double *dst = y.plane(n, c).data();
                switch (op) {
                case BroadcastOp::Sub: k.scale_shift(src, 1.0, -v, dst, s.plane()); break;
                case BroadcastOp::Add: k.scale_shift(src, 1.0, v, dst, s.plane()); break;
                case BroadcastOp::Mul: k.scale_shift(src, v, 0.0, dst, s.plane()); break;
                case BroadcastOp::Div: break;
                }
            }
        return y;
    }

    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t h = 0; h < s.h; ++h)
                for (std::size_t w = 0; w < s.w; ++w) {
                    const double a = x(n, c, h, w);
                    const double b = sp[at(n, c, h, w)];
                    double r = 0.0;
                    switch (op) {
                    case BroadcastOp::Sub: r = a - b; break;
                    case BroadcastOp::Div: r = a / b; break;
                    case BroadcastOp::Mul: r = a * b; break;
                    case BroadcastOp::Add: r = a + b; break;
                    }
                    y(n, c, h, w) = r;
                }
    return y;
}

GroupedView::GroupedView(const Tensor4 &x, std::size_t groups)
    : base_(x.ptr()), shape_(x.shape()), groups_(groups) {
    if (groups == 0)
        throw ConfigError("group count must be at least 1");
    if (shape_.c % groups != 0)
        throw ConfigError("channel count " + std::to_string(shape_.c) +
                          " is not divisible by group count " + std::to_string(groups));
}

Tensor4 to_grouped(const Tensor4 &x, std::size_t groups) {
    const GroupedView view(x, groups);
    const Shape4 &s = x.shape();
    return x.reshaped({s.n, groups, view.channels_per_group(), s.plane()});
}

Tensor4 from_grouped(const Tensor4 &grouped, const Shape4 &original) {
    const Shape4 &g = grouped.shape();
    if (g.n != original.n || g.c * g.h != original.c || g.w != original.plane())
        throw ShapeError("grouped shape " + g.str() + " does not fold back into " +
                         original.str());
    return grouped.reshaped(original);
}

} // namespace normlab
