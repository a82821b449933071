#include "reprog/foundation.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "reprog/checksum.hpp"
#include "reprog/error.hpp"
#include "reprog/optimizer.hpp"

namespace reprog {

FoundationModel::FoundationModel(Geometry geometry, std::vector<ConvLayerParams> shared,
                                 std::map<TaskId, MlpParams> heads)
    : geometry_(geometry), shared_(std::move(shared)), heads_(std::move(heads)) {
    check_chain(shared_, geometry_.channels);
    const std::size_t features = feature_dim();
    std::size_t out = 0;
    for (const auto& [task, head] : heads_) {
        check_mlp(head);
        if (head.in_dim() != features)
            fail(ErrorKind::dimension, "head " + std::to_string(task) + " input axis: expects " +
                                           std::to_string(head.in_dim()) + " features, core yields " +
                                           std::to_string(features));
        if (out != 0 && head.out_dim() != out) fail(ErrorKind::dimension, "heads disagree on output dimension");
        out = head.out_dim();
    }
}

FoundationModel FoundationModel::create(Geometry geometry, std::size_t out_dim, const FoundationArchitecture& arch,
                                        const std::vector<TaskId>& tasks, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ConvLayerParams> shared;
    std::size_t channels = geometry.channels;
    for (const auto& spec : arch.layers) {
        shared.push_back(init_conv(channels, spec.out_channels, spec.kernel_size, spec.dilation, rng));
        channels = spec.out_channels;
    }
    std::map<TaskId, MlpParams> heads;
    for (TaskId t : tasks) heads.emplace(t, init_mlp(channels, arch.head_hidden, out_dim, rng));
    return FoundationModel(geometry, std::move(shared), std::move(heads));
}

std::size_t FoundationModel::feature_dim() const {
    return shared_.empty() ? geometry_.channels : shared_.back().out_channels();
}

std::size_t FoundationModel::out_dim() const { return heads_.empty() ? 0 : heads_.begin()->second.out_dim(); }

std::vector<TaskId> FoundationModel::tasks() const {
    std::vector<TaskId> out;
    for (const auto& kv : heads_) out.push_back(kv.first);
    return out;
}

const MlpParams& FoundationModel::head(TaskId task) const {
    auto it = heads_.find(task);
    if (it == heads_.end()) fail(ErrorKind::missing_head, "no head for task " + std::to_string(task));
    return it->second;
}

Tensor FoundationModel::predict(const TimeWindow& x) const { return predict(x.values, x.task); }

Tensor FoundationModel::predict(const Tensor& values, TaskId task) const {
    const MlpParams& h = head(task);
    if (values.shape() != Shape{geometry_.channels, geometry_.steps})
        fail(ErrorKind::dimension, "window geometry " + shape_string(values.shape()) + " differs from model input " +
                                       shape_string({geometry_.channels, geometry_.steps}));
    return mlp_forward(tcn_forward(values, shared_), h);
}

ad::Var FoundationModel::forward(ad::Tape& tape, ad::Var x, TaskId task, bool trainable) const {
    const MlpParams& h = head(task);
    if (tape.value(x).shape() != Shape{geometry_.channels, geometry_.steps})
        fail(ErrorKind::dimension, "window geometry " + shape_string(tape.value(x).shape()) +
                                       " differs from model input");
    std::vector<ad::ConvVars> layers;
    for (const auto& layer : shared_) layers.push_back(ad::bind(tape, layer, trainable));
    return ad::mlp_forward(tape, ad::tcn_forward(tape, x, layers), ad::bind(tape, h, trainable));
}

void FoundationModel::check_frozen(const char* what) const {
    if (frozen_) fail(ErrorKind::usage, std::string("cannot ") + what + " of a frozen foundation model");
}

std::vector<ConvLayerParams>& FoundationModel::mutable_shared() {
    check_frozen("modify the shared core");
    return shared_;
}

MlpParams& FoundationModel::mutable_head(TaskId task) {
    check_frozen("modify a head");
    auto it = heads_.find(task);
    if (it == heads_.end()) fail(ErrorKind::missing_head, "no head for task " + std::to_string(task));
    return it->second;
}

NamedTensors FoundationModel::named_parameters() const {
    NamedTensors out;
    for (std::size_t i = 0; i < shared_.size(); ++i) {
        out.emplace_back("shared." + std::to_string(i) + ".kernel", &shared_[i].kernel);
        out.emplace_back("shared." + std::to_string(i) + ".bias", &shared_[i].bias);
    }
    for (const auto& [task, h] : heads_) {
        const std::string p = "head." + std::to_string(task) + ".";
        out.emplace_back(p + "w1", &h.w1);
        out.emplace_back(p + "b1", &h.b1);
        out.emplace_back(p + "w2", &h.w2);
        out.emplace_back(p + "b2", &h.b2);
    }
    return out;
}

std::vector<Tensor*> FoundationModel::parameters() {
    check_frozen("expose trainable parameters");
    std::vector<Tensor*> out;
    for (auto& layer : shared_) {
        out.push_back(&layer.kernel);
        out.push_back(&layer.bias);
    }
    for (auto& [task, h] : heads_) {
        out.push_back(&h.w1);
        out.push_back(&h.b1);
        out.push_back(&h.w2);
        out.push_back(&h.b2);
    }
    return out;
}

std::string FoundationModel::checksum() const {
    std::string text = "geometry " + std::to_string(geometry_.channels) + " " + std::to_string(geometry_.steps) + "\n";
    for (std::size_t i = 0; i < shared_.size(); ++i)
        text += "dilation " + std::to_string(i) + " " + std::to_string(shared_[i].dilation) + "\n";
    for (const auto& [name, t] : named_parameters()) {
        text += name + " " + shape_string(t->shape());
        for (double v : t->values()) text += " " + format_double(v);
        text += "\n";
    }
    return sha256_hex(text);
}

FoundationModel freeze(FoundationModel model) {
    model.freeze();
    return model;
}

double foundation_loss_and_gradients(const FoundationModel& model, std::span<const LabeledSample> batch,
                                     std::vector<Tensor>* gradients) {
    if (batch.empty()) fail(ErrorKind::usage, "empty batch");
    ad::Tape tape;
    std::vector<ad::ConvVars> shared;
    for (const auto& layer : model.shared()) shared.push_back(ad::bind(tape, layer, true));
    std::map<TaskId, ad::MlpVars> heads;
    ad::Var total{};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& s = batch[i];
        auto it = heads.find(s.window.task);
        if (it == heads.end()) it = heads.emplace(s.window.task, ad::bind(tape, model.head(s.window.task), true)).first;
        if (s.window.values.shape() != Shape{model.geometry().channels, model.geometry().steps})
            fail(ErrorKind::dimension, "sample window geometry " + shape_string(s.window.values.shape()) +
                                           " differs from model input");
        ad::Var x = tape.constant(s.window.values);
        ad::Var pred = ad::mlp_forward(tape, ad::tcn_forward(tape, x, shared), it->second);
        ad::Var loss = ad::mse(tape, pred, tape.constant(s.target));
        total = i == 0 ? loss : ad::add(tape, total, loss);
    }
    ad::Var mean = ad::scale(tape, total, 1.0 / static_cast<double>(batch.size()));
    const double value = tape.value(mean)[0];
    if (!gradients) return value;

    tape.backward(mean);
    gradients->clear();
    for (const auto& v : shared) {
        gradients->push_back(tape.grad(v.kernel));
        gradients->push_back(tape.grad(v.bias));
    }
    for (const auto& [task, h] : model.heads()) {
        auto it = heads.find(task);
        if (it == heads.end()) {
            for (const Tensor* t : {&h.w1, &h.b1, &h.w2, &h.b2}) gradients->push_back(Tensor::zeros_like(*t));
            continue;
        }
        for (ad::Var v : {it->second.w1, it->second.b1, it->second.w2, it->second.b2})
            gradients->push_back(tape.grad(v));
    }
    return value;
}

FoundationTraining train_foundation(const std::vector<LabeledSample>& data, const std::vector<TaskId>& tasks,
                                    Geometry geometry, std::size_t out_dim, const FoundationArchitecture& arch,
                                    const TrainConfig& config) {
    if (tasks.empty()) fail(ErrorKind::config, "no tasks declared for foundation training");
    if (config.batch_size < 1 || config.epochs < 1) fail(ErrorKind::config, "epochs and batch_size must be >= 1");
    const std::set<TaskId> declared(tasks.begin(), tasks.end());
    std::map<TaskId, std::size_t> counts;
    for (const auto& s : data) {
        if (!declared.count(s.window.task))
            fail(ErrorKind::config, "sample for undeclared task " + std::to_string(s.window.task));
        ++counts[s.window.task];
    }
    for (TaskId t : declared)
        if (!counts[t]) fail(ErrorKind::config, "task " + std::to_string(t) + " has no training samples");

    FoundationTraining result{FoundationModel::create(geometry, out_dim, arch, tasks, config.seed), {}};
    FoundationModel& model = result.model;
    auto params = model.parameters();
    // Head slot ranges so absent heads can be skipped in a step.
    std::map<TaskId, std::size_t> head_slot;
    {
        std::size_t slot = 2 * model.shared().size();
        for (const auto& kv : model.heads()) {
            head_slot[kv.first] = slot;
            slot += 4;
        }
    }
    OptimizerState state = OptimizerState::init(params, {config.learning_rate});
    Rng rng(config.seed ^ 0x5bd1e995ULL);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<LabeledSample> batch;
    std::vector<Tensor> grads;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            std::set<TaskId> present;
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(data[order[i]]);
                present.insert(data[order[i]].window.task);
            }
            epoch_loss += foundation_loss_and_gradients(model, batch, &grads) * static_cast<double>(batch.size());
            std::vector<const Tensor*> grad_ptrs(grads.size());
            for (std::size_t i = 0; i < grads.size(); ++i) grad_ptrs[i] = &grads[i];
            for (const auto& [task, slot] : head_slot)
                if (!present.count(task))
                    for (std::size_t j = 0; j < 4; ++j) grad_ptrs[slot + j] = nullptr;
            optimizer_step(params, grad_ptrs, state);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(data.size()));
    }
    return result;
}

}  // namespace reprog
