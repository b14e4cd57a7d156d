#include "normlab/net/model.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/net/conv.hpp"

#include <algorithm>

namespace normlab {
namespace {

// Noise hooks are transparent: they take no position in names or init
// streams, so adding them leaves every other layer identical.
bool is_hook(const Layer &layer) { return dynamic_cast<const NoiseHookLayer *>(&layer) != nullptr; }

template <class F> void for_each_position(const std::vector<std::unique_ptr<Layer>> &layers, F &&f) {
    std::size_t pos = 0;
    for (const auto &layer : layers) {
        if (is_hook(*layer)) continue;
        f(*layer, pos++);
    }
}

} // namespace

LayerSpec LayerSpec::conv(std::size_t in, std::size_t out, std::size_t stride) {
    LayerSpec s{LayerKind::Conv3x3};
    s.in_channels = in;
    s.out_channels = out;
    s.stride = stride;
    return s;
}

LayerSpec LayerSpec::normalization(NormKind kind, std::size_t channels, std::size_t groups) {
    LayerSpec s{LayerKind::Norm};
    s.in_channels = s.out_channels = channels;
    s.norm = kind;
    s.groups = groups;
    return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{LayerKind::Relu}; }
LayerSpec LayerSpec::pool() { return LayerSpec{LayerKind::GlobalAvgPool}; }

LayerSpec LayerSpec::linear(std::size_t in, std::size_t out) {
    LayerSpec s{LayerKind::Linear};
    s.in_channels = in;
    s.out_channels = out;
    return s;
}

LayerSpec LayerSpec::noise(double mu, double sigma) {
    LayerSpec s{LayerKind::NoiseHook};
    s.noise_mu = mu;
    s.noise_sigma = sigma;
    return s;
}

Model::Model(std::vector<std::unique_ptr<Layer>> layers) : layers_(std::move(layers)) {}

Tensor4 Model::forward(const Tensor4 &x, const ForwardContext &ctx) {
    Tensor4 h = x;
    for (auto &layer : layers_) h = layer->forward(h, ctx);
    return h;
}

void Model::backward(const Tensor4 &dlogits) {
    Tensor4 g = dlogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

std::vector<ParamRef> Model::params() {
    std::vector<ParamRef> out;
    for_each_position(layers_, [&](Layer &l, std::size_t i) {
        l.collect_params(out, "layer" + std::to_string(i) + "." + l.kind() + ".");
    });
    return out;
}

std::vector<BufferRef> Model::buffers() {
    std::vector<BufferRef> out;
    for_each_position(layers_, [&](Layer &l, std::size_t i) {
        l.collect_buffers(out, "layer" + std::to_string(i) + "." + l.kind() + ".");
    });
    return out;
}

std::size_t Model::param_count() {
    std::size_t n = 0;
    for (const auto &p : params()) n += p.value.size();
    return n;
}

std::vector<double> Model::flat_params() {
    std::vector<double> out;
    for (const auto &p : params()) out.insert(out.end(), p.value.begin(), p.value.end());
    return out;
}

void Model::set_flat_params(std::span<const double> values) {
    std::size_t at = 0;
    const auto ps = params();
    for (const auto &p : ps) {
        if (at + p.value.size() > values.size())
            throw ShapeError("set_flat_params: too few values");
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(at), p.value.size(), p.value.begin());
        at += p.value.size();
    }
    if (at != values.size()) throw ShapeError("set_flat_params: too many values");
}

std::vector<double> Model::flat_grads() {
    std::vector<double> out;
    for (const auto &p : params()) out.insert(out.end(), p.grad.begin(), p.grad.end());
    return out;
}

std::vector<std::string> Model::lambda_names() const {
    std::vector<std::string> out;
    for_each_position(layers_, [&](const Layer &l, std::size_t i) {
        if (auto *n = dynamic_cast<const NormLayer *>(&l); n && is_gnplus(n->norm_kind()))
            out.push_back("lambda_layer" + std::to_string(i));
    });
    return out;
}

std::vector<double> Model::lambdas() const {
    std::vector<double> out;
    for (const auto &layer : layers_)
        if (auto *n = dynamic_cast<const NormLayer *>(layer.get()); n && is_gnplus(n->norm_kind()))
            out.push_back(n->lambda());
    return out;
}

Model build_model(std::span<const LayerSpec> specs, std::uint64_t seed) {
    std::vector<std::unique_ptr<Layer>> layers;
    std::size_t channels = 0; // 0: not yet known (first layer decides)
    bool spatial = true;
    bool after_norm = false;
    std::size_t pos = 0; // position among non-hook layers
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const LayerSpec &s = specs[i];
        if (s.kind != LayerKind::NoiseHook) ++pos;
        Rng init(mix_seed(seed, 1000 + pos - 1));
        auto expect = [&](std::size_t in) {
            if (channels != 0 && in != channels)
                throw ConfigError("layer " + std::to_string(i) + " expects " + std::to_string(in) +
                                  " channels but receives " + std::to_string(channels));
        };
        const bool was_after_norm = after_norm;
        after_norm = false;
        switch (s.kind) {
        case LayerKind::Conv3x3:
            if (!spatial) throw ConfigError("conv3x3 after global pooling");
            expect(s.in_channels);
            layers.push_back(std::make_unique<Conv3x3Layer>(s.in_channels, s.out_channels, s.stride, init));
            channels = s.out_channels;
            break;
        case LayerKind::Norm:
            expect(s.in_channels);
            layers.push_back(std::make_unique<NormLayer>(s.norm, s.in_channels, s.groups));
            after_norm = true;
            break;
        case LayerKind::Relu:
            layers.push_back(std::make_unique<ReluLayer>());
            break;
        case LayerKind::GlobalAvgPool:
            layers.push_back(std::make_unique<GlobalAvgPoolLayer>());
            spatial = false;
            break;
        case LayerKind::Linear:
            if (spatial) throw ConfigError("linear layer must follow global pooling");
            expect(s.in_channels);
            layers.push_back(std::make_unique<LinearLayer>(s.in_channels, s.out_channels, init));
            channels = s.out_channels;
            break;
        case LayerKind::NoiseHook:
            if (!was_after_norm)
                throw ConfigError("noise hook at layer " + std::to_string(i) +
                                  " must directly follow a normalization layer");
            layers.push_back(std::make_unique<NoiseHookLayer>(s.noise_mu, s.noise_sigma,
                                                              mix_seed(seed, 5000 + pos - 1)));
            break;
        }
    }
    return Model(std::move(layers));
}

std::vector<LayerSpec> micro_cnn_spec(const MicroCnnOptions &o) {
    if (o.classes < 2) throw ConfigError("classifier needs at least 2 classes");
    std::vector<LayerSpec> specs;
    auto block = [&](std::size_t in, std::size_t out, std::size_t stride) {
        specs.push_back(LayerSpec::conv(in, out, stride));
        specs.push_back(LayerSpec::normalization(o.norm, out, o.groups));
        if (o.noise) specs.push_back(LayerSpec::noise(o.noise_mu, o.noise_sigma));
        specs.push_back(LayerSpec::relu());
    };
    block(o.in_channels, o.widths[0], 1);
    block(o.widths[0], o.widths[1], 2);
    block(o.widths[1], o.widths[2], 1);
    specs.push_back(LayerSpec::pool());
    specs.push_back(LayerSpec::linear(o.widths[2], static_cast<std::size_t>(o.classes)));
    return specs;
}

std::vector<LayerSpec> two_block_spec(NormKind norm, std::size_t groups, int classes,
                                      std::size_t c1, std::size_t c2) {
    return {LayerSpec::conv(3, c1, 1),
            LayerSpec::normalization(norm, c1, groups),
            LayerSpec::relu(),
            LayerSpec::conv(c1, c2, 2),
            LayerSpec::normalization(norm, c2, groups),
            LayerSpec::relu(),
            LayerSpec::pool(),
            LayerSpec::linear(c2, static_cast<std::size_t>(classes))};
}

} // namespace normlab
