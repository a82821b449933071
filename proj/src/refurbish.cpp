#include "reprog/refurbish.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reprog/checksum.hpp"
#include "reprog/error.hpp"
#include "reprog/optimizer.hpp"

namespace reprog {

RefurbishModel::RefurbishModel(Geometry geometry, std::vector<ConvLayerParams> layers, ConvLayerParams output)
    : geometry_(geometry), layers_(std::move(layers)), output_(std::move(output)) {
    check_chain(layers_, geometry_.channels);
    const std::size_t hidden = layers_.empty() ? geometry_.channels : layers_.back().out_channels();
    if (output_.kernel.rank() != 3 || output_.in_channels() != hidden || output_.out_channels() != geometry_.channels)
        fail(ErrorKind::dimension, "refurbish output map must take " + std::to_string(hidden) + " channels to " +
                                       std::to_string(geometry_.channels));
}

RefurbishModel RefurbishModel::create(Geometry geometry, const RefurbishArchitecture& arch, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ConvLayerParams> layers;
    std::size_t channels = geometry.channels;
    for (const auto& spec : arch.layers) {
        layers.push_back(init_conv(channels, spec.out_channels, spec.kernel_size, spec.dilation, rng));
        channels = spec.out_channels;
    }
    ConvLayerParams output = init_conv(channels, geometry.channels, arch.output_kernel, 1, rng);
    return RefurbishModel(geometry, std::move(layers), std::move(output));
}

Tensor RefurbishModel::forward(const Tensor& x) const {
    if (x.shape() != Shape{geometry_.channels, geometry_.steps})
        fail(ErrorKind::dimension, "refurbish input geometry " + shape_string(x.shape()) + " differs from " +
                                       shape_string({geometry_.channels, geometry_.steps}));
    return causal_conv_forward(tcn_sequence(x, layers_), output_);
}

TimeWindow RefurbishModel::forward(const TimeWindow& x) const { return {forward(x.values), x.task, x.time_index}; }

RefurbishModel::Bound RefurbishModel::bind(ad::Tape& tape, bool trainable) const {
    Bound b;
    for (const auto& layer : layers_) b.layers.push_back(ad::bind(tape, layer, trainable));
    b.output = ad::bind(tape, output_, trainable);
    return b;
}

ad::Var RefurbishModel::apply(ad::Tape& tape, const Bound& bound, ad::Var x) {
    ad::Var h = ad::tcn_sequence(tape, x, bound.layers);
    return ad::causal_conv(tape, h, bound.output.kernel, bound.output.bias, bound.output.dilation);
}

NamedTensors RefurbishModel::named_parameters() const {
    NamedTensors out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        out.emplace_back("layer." + std::to_string(i) + ".kernel", &layers_[i].kernel);
        out.emplace_back("layer." + std::to_string(i) + ".bias", &layers_[i].bias);
    }
    out.emplace_back("output.kernel", &output_.kernel);
    out.emplace_back("output.bias", &output_.bias);
    return out;
}

std::vector<Tensor*> RefurbishModel::parameters() {
    std::vector<Tensor*> out;
    for (auto& layer : layers_) {
        out.push_back(&layer.kernel);
        out.push_back(&layer.bias);
    }
    out.push_back(&output_.kernel);
    out.push_back(&output_.bias);
    return out;
}

std::string RefurbishModel::checksum() const {
    std::string text = "geometry " + std::to_string(geometry_.channels) + " " + std::to_string(geometry_.steps) + "\n";
    for (std::size_t i = 0; i < layers_.size(); ++i)
        text += "dilation " + std::to_string(i) + " " + std::to_string(layers_[i].dilation) + "\n";
    for (const auto& [name, t] : named_parameters()) {
        text += name + " " + shape_string(t->shape());
        for (double v : t->values()) text += " " + format_double(v);
        text += "\n";
    }
    return sha256_hex(text);
}

void RefurbishTrainConfig::validate() const {
    if (alpha < 0.0 || beta < 0.0 || !(alpha + beta > 0.0))
        fail(ErrorKind::config, "refurbish.alpha and refurbish.beta must be >= 0 with a positive sum");
    if (epochs < 1) fail(ErrorKind::config, "refurbish.epochs must be >= 1");
    if (batch_size < 1) fail(ErrorKind::config, "refurbish.batch_size must be >= 1");
    if (!(learning_rate > 0.0)) fail(ErrorKind::config, "refurbish.learning_rate must be > 0");
}

namespace {

void require_frozen(const FoundationModel& g) {
    if (!g.frozen()) fail(ErrorKind::usage, "refurbish training requires a frozen foundation model");
}

}  // namespace

double refurbish_batch_loss(std::span<const AmputeeTrainingTriple> batch, const RefurbishModel& h,
                            const FoundationModel& g_frozen, const RefurbishTrainConfig& cfg,
                            std::vector<Tensor>* gradients) {
    require_frozen(g_frozen);
    if (batch.empty()) fail(ErrorKind::usage, "empty batch");
    if (!(h.geometry() == g_frozen.geometry()))
        fail(ErrorKind::dimension, "refurbish output geometry differs from the foundation input geometry");
    ad::Tape tape;
    const auto bound = h.bind(tape, true);
    ad::Var total{};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& s = batch[i];
        require_same_shape(s.x_amp.values, s.x_corr.values, "refurbish triple window");
        ad::Var x_hat = RefurbishModel::apply(tape, bound, tape.constant(s.x_amp.values));
        ad::Var template_term = ad::mse(tape, x_hat, tape.constant(s.x_corr.values));
        ad::Var pred = g_frozen.forward(tape, x_hat, s.x_amp.task, false);
        ad::Var output_term = ad::mse(tape, pred, tape.constant(s.y_amp));
        ad::Var loss = ad::add(tape, ad::scale(tape, template_term, cfg.alpha), ad::scale(tape, output_term, cfg.beta));
        total = i == 0 ? loss : ad::add(tape, total, loss);
    }
    ad::Var mean = ad::scale(tape, total, 1.0 / static_cast<double>(batch.size()));
    const double value = tape.value(mean)[0];
    if (!gradients) return value;
    tape.backward(mean);
    gradients->clear();
    for (const auto& v : bound.layers) {
        gradients->push_back(tape.grad(v.kernel));
        gradients->push_back(tape.grad(v.bias));
    }
    gradients->push_back(tape.grad(bound.output.kernel));
    gradients->push_back(tape.grad(bound.output.bias));
    return value;
}

double refurbish_loss(const AmputeeTrainingTriple& triple, const RefurbishModel& h, const FoundationModel& g_frozen,
                      const RefurbishTrainConfig& cfg) {
    return refurbish_batch_loss(std::span(&triple, 1), h, g_frozen, cfg, nullptr);
}

Tensor foundation_input_gradient(const FoundationModel& g_frozen, const TimeWindow& x, const Tensor& y) {
    ad::Tape tape;
    ad::Var input = tape.variable(x.values);
    ad::Var loss = ad::mse(tape, g_frozen.forward(tape, input, x.task, false), tape.constant(y));
    tape.backward(loss);
    return tape.grad(input);
}

RefurbishTraining train_refurbish(const std::vector<AmputeeTrainingTriple>& data, const FoundationModel& g_frozen,
                                  const RefurbishArchitecture& arch, const RefurbishTrainConfig& cfg) {
    cfg.validate();
    require_frozen(g_frozen);
    if (data.empty()) fail(ErrorKind::config, "refurbish training needs at least one triple");
    RefurbishTraining result{RefurbishModel::create(g_frozen.geometry(), arch, cfg.seed), {}};
    auto params = result.model.parameters();
    OptimizerState state = OptimizerState::init(params, {cfg.learning_rate});
    Rng rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<AmputeeTrainingTriple> batch;
    std::vector<Tensor> grads;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
            epoch_loss += refurbish_batch_loss(batch, result.model, g_frozen, cfg, &grads) *
                          static_cast<double>(batch.size());
            std::vector<const Tensor*> grad_ptrs;
            for (const auto& g : grads) grad_ptrs.push_back(&g);
            optimizer_step(params, grad_ptrs, state);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(data.size()));
    }
    return result;
}

}  // namespace reprog
