#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reprog/autodiff.hpp"
#include "reprog/data.hpp"
#include "reprog/layers.hpp"

namespace reprog {

struct ConvSpec {
    std::size_t out_channels = 16;
    std::size_t kernel_size = 3;
    std::size_t dilation = 1;
};

struct FoundationArchitecture {
    std::vector<ConvSpec> layers;
    std::size_t head_hidden = 32;
};

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
};

struct Geometry {
    std::size_t channels = 0;
    std::size_t steps = 0;

    friend bool operator==(const Geometry&, const Geometry&) = default;
};

using NamedTensors = std::vector<std::pair<std::string, const Tensor*>>;

/// g(X, t) = g_t(g_s(X)): a shared causal-conv core and one MLP head per task.
class FoundationModel {
public:
    FoundationModel() = default;
    FoundationModel(Geometry geometry, std::vector<ConvLayerParams> shared, std::map<TaskId, MlpParams> heads);

    static FoundationModel create(Geometry geometry, std::size_t out_dim, const FoundationArchitecture& arch,
                                  const std::vector<TaskId>& tasks, std::uint64_t seed);

    Tensor predict(const TimeWindow& x) const;
    Tensor predict(const Tensor& values, TaskId task) const;

    /// Records g on the tape with parameters as constants (or tracked when `trainable`).
    ad::Var forward(ad::Tape& tape, ad::Var x, TaskId task, bool trainable = false) const;

    void freeze() noexcept { frozen_ = true; }
    bool frozen() const noexcept { return frozen_; }

    const Geometry& geometry() const noexcept { return geometry_; }
    std::size_t out_dim() const;
    std::size_t feature_dim() const;
    std::vector<TaskId> tasks() const;
    bool has_head(TaskId task) const { return heads_.count(task) != 0; }

    const std::vector<ConvLayerParams>& shared() const noexcept { return shared_; }
    const std::map<TaskId, MlpParams>& heads() const noexcept { return heads_; }
    const MlpParams& head(TaskId task) const;

    // Mutable access; a usage error once frozen.
    std::vector<ConvLayerParams>& mutable_shared();
    MlpParams& mutable_head(TaskId task);

    /// Stable parameter order: shared layers, then heads by task id.
    NamedTensors named_parameters() const;
    std::vector<Tensor*> parameters();

    /// SHA-256 over geometry, dilations and every serialized parameter value.
    std::string checksum() const;

private:
    void check_frozen(const char* what) const;

    Geometry geometry_;
    std::vector<ConvLayerParams> shared_;
    std::map<TaskId, MlpParams> heads_;
    bool frozen_ = false;
};

FoundationModel freeze(FoundationModel model);

/// Mean batch MSE and its gradient for every entry of `model.parameters()`
/// (zero tensors for heads with no sample in the batch).
double foundation_loss_and_gradients(const FoundationModel& model, std::span<const LabeledSample> batch,
                                     std::vector<Tensor>* gradients);

struct FoundationTraining {
    FoundationModel model;
    std::vector<double> loss_history;  // mean training loss per epoch
};

/// Multi-task training: batches mix tasks; shared parameters always update,
/// a head only when its task is present in the batch.
FoundationTraining train_foundation(const std::vector<LabeledSample>& data, const std::vector<TaskId>& tasks,
                                    Geometry geometry, std::size_t out_dim, const FoundationArchitecture& arch,
                                    const TrainConfig& config);

}  // namespace reprog
