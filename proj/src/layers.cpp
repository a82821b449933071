#include "reprog/layers.hpp"

#include <cmath>
#include <string>

#include "reprog/error.hpp"
#include "reprog/kernels.hpp"

namespace reprog {

namespace {

Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = dist(rng);
    return t;
}

}  // namespace

ConvLayerParams init_conv(std::size_t in, std::size_t out, std::size_t kernel_size, std::size_t dilation, Rng& rng) {
    if (kernel_size < 1 || dilation < 1) fail(ErrorKind::config, "conv kernel_size and dilation must be >= 1");
    return {glorot({out, in, kernel_size}, in * kernel_size, out * kernel_size, rng), Tensor({out}), dilation};
}

MlpParams init_mlp(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
    MlpParams p;
    p.w1 = glorot({hidden, in}, in, hidden, rng);
    p.b1 = Tensor({hidden});
    p.w2 = glorot({out, hidden}, hidden, out, rng);
    p.b2 = Tensor({out});
    return p;
}

void check_mlp(const MlpParams& p) {
    if (p.w1.rank() != 2 || p.w2.rank() != 2) fail(ErrorKind::dimension, "mlp weights must be matrices");
    if (p.w2.dim(1) != p.w1.dim(0))
        fail(ErrorKind::dimension, "mlp hidden axis: w1 has " + std::to_string(p.w1.dim(0)) + " rows but w2 has " +
                                       std::to_string(p.w2.dim(1)) + " columns");
    if (p.b1.shape() != Shape{p.w1.dim(0)} || p.b2.shape() != Shape{p.w2.dim(0)})
        fail(ErrorKind::dimension, "mlp bias axis does not match its weight rows");
}

void check_chain(std::span<const ConvLayerParams> layers, std::size_t in_channels) {
    std::size_t channels = in_channels;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].kernel.rank() != 3)
            fail(ErrorKind::dimension, "layer " + std::to_string(i) + " kernel must have rank 3");
        if (layers[i].in_channels() != channels)
            fail(ErrorKind::dimension, "layer " + std::to_string(i) + " channel axis: expects " +
                                           std::to_string(layers[i].in_channels()) + " inputs, receives " +
                                           std::to_string(channels));
        channels = layers[i].out_channels();
    }
}

Tensor causal_conv_forward(const Tensor& x, const ConvLayerParams& p) {
    return kernels::causal_conv(x, p.kernel, p.bias, p.dilation);
}

Tensor tcn_sequence(const Tensor& x, std::span<const ConvLayerParams> layers) {
    if (x.rank() != 2) fail(ErrorKind::dimension, "tcn input must be [channels x time], got " + shape_string(x.shape()));
    check_chain(layers, x.dim(0));
    Tensor h = x;
    for (const auto& layer : layers) {
        Tensor z = causal_conv_forward(h, layer);
        if (layer.residual())
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += h[i];
        h = kernels::relu(z);
    }
    return h;
}

Tensor tcn_forward(const Tensor& x, std::span<const ConvLayerParams> layers) {
    const Tensor h = tcn_sequence(x, layers);
    const std::size_t channels = h.dim(0), steps = h.dim(1);
    Tensor f({channels});
    for (std::size_t c = 0; c < channels; ++c) f[c] = h[c * steps + steps - 1];
    return f;
}

Tensor mlp_forward(const Tensor& f, const MlpParams& p) {
    check_mlp(p);
    return kernels::affine(p.w2, p.b2, kernels::relu(kernels::affine(p.w1, p.b1, f)));
}

double mse(const Tensor& pred, const Tensor& target) { return kernels::mse(pred, target); }

namespace ad {

namespace {
Var put(Tape& tape, const Tensor& t, bool trainable) { return trainable ? tape.variable(t) : tape.constant(t); }
}  // namespace

ConvVars bind(Tape& tape, const ConvLayerParams& p, bool trainable) {
    return {put(tape, p.kernel, trainable), put(tape, p.bias, trainable), p.dilation};
}

MlpVars bind(Tape& tape, const MlpParams& p, bool trainable) {
    check_mlp(p);
    return {put(tape, p.w1, trainable), put(tape, p.b1, trainable), put(tape, p.w2, trainable),
            put(tape, p.b2, trainable)};
}

Var tcn_sequence(Tape& tape, Var x, std::span<const ConvVars> layers) {
    Var h = x;
    for (const auto& layer : layers) {
        Var z = causal_conv(tape, h, layer.kernel, layer.bias, layer.dilation);
        if (tape.value(z).shape() == tape.value(h).shape()) z = add(tape, z, h);
        h = relu(tape, z);
    }
    return h;
}

Var tcn_forward(Tape& tape, Var x, std::span<const ConvVars> layers) {
    return last_step(tape, tcn_sequence(tape, x, layers));
}

Var mlp_forward(Tape& tape, Var f, const MlpVars& p) {
    return linear(tape, p.w2, p.b2, relu(tape, linear(tape, p.w1, p.b1, f)));
}

}  // namespace ad

}  // namespace reprog
