#include "normlab/cli/gradcheck.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/core/random.hpp"
#include "normlab/net/conv.hpp"
#include "normlab/net/loss.hpp"
#include "normlab/net/model.hpp"
#include "normlab/norm/batch_norm.hpp"
#include "normlab/norm/gnplus.hpp"
#include "normlab/norm/group_norm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

namespace normlab::cli {

double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), kRelErrorFloor});
    return std::abs(analytic - numeric) / scale;
}

namespace {

// One differentiable input of a check: its storage and the analytic gradient.
struct Wrt {
    std::span<double> values;
    std::vector<double> analytic;
};

class Harness {
  public:
    explicit Harness(const GradcheckOptions &o) : opt_(o) {}

    void check(const std::string &name, const Shape4 &shape, std::vector<Wrt> wrt,
               const std::function<double()> &loss) {
        GradcheckEntry e{name, shape.str(), 0.0, 0, true};
        const double fault = name == opt_.fault ? 1.01 : 1.0;
        if (fault != 1.0) fault_used_ = true;
        for (auto &w : wrt) {
            for (std::size_t i = 0; i < w.values.size(); ++i) {
                const double saved = w.values[i];
                w.values[i] = saved + opt_.step;
                const double up = loss();
                w.values[i] = saved - opt_.step;
                const double down = loss();
                w.values[i] = saved;
                const double numeric = (up - down) / (2.0 * opt_.step);
                e.max_rel_error =
                    std::max(e.max_rel_error, relative_error(fault * w.analytic[i], numeric));
                ++e.compared;
            }
        }
        e.pass = e.max_rel_error <= opt_.tolerance;
        entries_.push_back(std::move(e));
    }

    bool fault_used() const { return fault_used_; }
    std::vector<GradcheckEntry> take() { return std::move(entries_); }

  private:
    GradcheckOptions opt_;
    bool fault_used_ = false;
    std::vector<GradcheckEntry> entries_;
};

Tensor4 random_tensor(Shape4 s, Rng &rng, double scale = 1.0) {
    Tensor4 t(s);
    for (double &v : t.data()) v = scale * rng.normal();
    return t;
}

std::vector<double> random_vector(std::size_t n, Rng &rng, double mean, double scale) {
    std::vector<double> v(n);
    for (double &e : v) e = mean + scale * rng.normal();
    return v;
}

std::vector<double> to_vector(const Tensor4 &t) { return {t.data().begin(), t.data().end()}; }

// Scalar objective sum(r * y) with a fixed random projection r.
double project(const Tensor4 &y, const Tensor4 &r) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * r.data()[i];
    return s;
}

void check_conv(Harness &h, Rng &rng, std::size_t stride) {
    Tensor4 x = random_tensor({2, 3, 4, 4}, rng);
    Tensor4 w = random_tensor({4, 3, 3, 3}, rng, 0.3);
    std::vector<double> b = random_vector(4, rng, 0.0, 0.1);
    auto fwd = conv3x3_forward(x, w, b, stride);
    Tensor4 r = random_tensor(fwd.y.shape(), rng);
    auto g = conv3x3_backward(fwd.cache, r);
    h.check("conv3x3[s=" + std::to_string(stride) + "]", x.shape(),
            {{x.data(), to_vector(g.dx)}, {w.data(), to_vector(g.dweight)}, {b, g.dbias}},
            [&] { return project(conv3x3_forward(x, w, b, stride).y, r); });
}

void check_relu(Harness &h, Rng &rng) {
    Tensor4 x = random_tensor({2, 3, 4, 4}, rng);
    // Keep every input away from the kink at 0.
    for (double &v : x.data()) v += v >= 0 ? 0.1 : -0.1;
    Tensor4 r = random_tensor(x.shape(), rng);
    Tensor4 dx = relu_backward(x, r);
    h.check("relu", x.shape(), {{x.data(), to_vector(dx)}},
            [&] { return project(relu_forward(x), r); });
}

void check_pool(Harness &h, Rng &rng) {
    Tensor4 x = random_tensor({2, 3, 4, 4}, rng);
    Tensor4 r = random_tensor({2, 3, 1, 1}, rng);
    Tensor4 dx = global_avg_pool_backward(x.shape(), r);
    h.check("global_avg_pool", x.shape(), {{x.data(), to_vector(dx)}},
            [&] { return project(global_avg_pool_forward(x), r); });
}

void check_linear(Harness &h, Rng &rng) {
    Tensor4 x = random_tensor({3, 4, 1, 1}, rng);
    Tensor4 w = random_tensor({5, 4, 1, 1}, rng, 0.5);
    std::vector<double> b = random_vector(5, rng, 0.0, 0.1);
    Tensor4 r = random_tensor({3, 5, 1, 1}, rng);
    auto g = linear_backward(x, w, r);
    h.check("linear", x.shape(),
            {{x.data(), to_vector(g.dx)}, {w.data(), to_vector(g.dweight)}, {b, g.dbias}},
            [&] { return project(linear_forward(x, w, b), r); });
}

void check_cross_entropy(Harness &h, Rng &rng) {
    Tensor4 logits = random_tensor({3, 5, 1, 1}, rng, 2.0);
    const std::vector<int> labels{0, 3, 4};
    auto res = cross_entropy(logits, labels);
    h.check("cross_entropy", logits.shape(), {{logits.data(), to_vector(res.dlogits)}},
            [&] { return cross_entropy(logits, labels).loss; });
}

void check_bn(Harness &h, Rng &rng, Mode mode) {
    Tensor4 x = random_tensor({3, 3, 3, 3}, rng, 1.5);
    BatchNormState state(3);
    state.mode = mode;
    if (mode == Mode::Eval) {
        state.running_mean = random_vector(3, rng, 0.0, 0.5);
        state.running_var = random_vector(3, rng, 1.5, 0.2);
    }
    auto fwd = bn_normalize(x, state, false);
    Tensor4 r = random_tensor(x.shape(), rng);
    Tensor4 dx = bn_backward(fwd.cache, r);
    h.check(mode == Mode::Train ? "BN" : "BN[eval]", x.shape(), {{x.data(), to_vector(dx)}},
            [&] { return project(bn_normalize(x, state, false).y, r); });
}

void check_gn(Harness &h, Rng &rng, std::size_t groups) {
    Tensor4 x = random_tensor({2, 4, 3, 3}, rng, 1.5);
    const GroupNormConfig cfg{groups, 1e-5};
    auto fwd = gn_normalize(x, cfg);
    Tensor4 r = random_tensor(x.shape(), rng);
    Tensor4 dx = gn_backward(fwd.cache, r);
    h.check("GN[G=" + std::to_string(groups) + "]", x.shape(), {{x.data(), to_vector(dx)}},
            [&] { return project(gn_normalize(x, cfg).y, r); });
}

void check_gnplus(Harness &h, Rng &rng, NormKind kind, GNPlusVariant variant) {
    Tensor4 x = random_tensor({3, 4, 3, 3}, rng, 1.5);
    GNPlusState state(variant, 4, 2);
    state.affine.gamma = random_vector(4, rng, 1.0, 0.3);
    state.affine.beta = random_vector(4, rng, 0.0, 0.3);
    state.lambda = 0.3;
    auto fwd = gnplus_forward(x, state, false);
    Tensor4 r = random_tensor(x.shape(), rng);
    auto g = gnplus_backward(fwd.cache, r);
    std::span<double> lambda(&state.lambda, 1);
    h.check(std::string(norm_kind_name(kind)), x.shape(),
            {{x.data(), to_vector(g.dx)},
             {state.affine.gamma, g.dgamma},
             {state.affine.beta, g.dbeta},
             {lambda, {g.dlambda}}},
            [&] { return project(gnplus_forward(x, state, false).y, r); });
}

void check_network(Harness &h, Rng &rng, std::uint64_t seed, NormKind kind) {
    const int classes = 3;
    auto specs = two_block_spec(kind, 2, classes);
    Model model = build_model(specs, seed);
    Tensor4 x = random_tensor({2, 3, 4, 4}, rng);
    const std::vector<int> labels{0, 2};
    const auto ctx = ForwardContext::probe();

    auto loss = [&] { return cross_entropy(model.forward(x, ctx), labels).loss; };
    auto res = cross_entropy(model.forward(x, ctx), labels);
    model.backward(res.dlogits);

    std::vector<Wrt> wrt;
    for (auto &p : model.params())
        wrt.push_back({p.value, {p.grad.begin(), p.grad.end()}});
    h.check("network[" + std::string(norm_kind_name(kind)) + "]", x.shape(), std::move(wrt), loss);
}

} // namespace

std::vector<GradcheckEntry> run_gradcheck(const GradcheckOptions &options) {
    if (!(options.step > 0.0)) throw ConfigError("gradcheck step must be positive");
    Harness h(options);
    Rng rng(mix_seed(options.seed, 0x6C0C));

    check_conv(h, rng, 1);
    check_conv(h, rng, 2);
    check_relu(h, rng);
    check_pool(h, rng);
    check_linear(h, rng);
    check_cross_entropy(h, rng);
    check_bn(h, rng, Mode::Train);
    check_bn(h, rng, Mode::Eval);
    for (std::size_t g : {1, 2, 4}) check_gn(h, rng, g);
    check_gnplus(h, rng, NormKind::GNPlusGNFirst, GNPlusVariant::GNFirst);
    check_gnplus(h, rng, NormKind::GNPlusBNFirst, GNPlusVariant::BNFirst);
    check_gnplus(h, rng, NormKind::GNPlusParallel, GNPlusVariant::Parallel);
    for (auto kind : {NormKind::BatchNorm, NormKind::GroupNorm, NormKind::GNPlusGNFirst,
                      NormKind::GNPlusBNFirst, NormKind::GNPlusParallel})
        check_network(h, rng, options.seed, kind);

    if (!options.fault.empty() && !h.fault_used())
        throw ConfigError("fault_injection names no known check: '" + options.fault + "'");
    return h.take();
}

} // namespace normlab::cli
