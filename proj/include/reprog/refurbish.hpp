#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reprog/autodiff.hpp"
#include "reprog/data.hpp"
#include "reprog/foundation.hpp"
#include "reprog/layers.hpp"

namespace reprog {

struct RefurbishArchitecture {
    std::vector<ConvSpec> layers;  // hidden causal conv blocks (may be empty)
    std::size_t output_kernel = 3;
};

/// h(X; Theta_h): hidden TCN blocks followed by a linear causal conv back to
/// the foundation input channels, so the output keeps the C x T geometry.
class RefurbishModel {
public:
    RefurbishModel() = default;
    RefurbishModel(Geometry geometry, std::vector<ConvLayerParams> layers, ConvLayerParams output);

    static RefurbishModel create(Geometry geometry, const RefurbishArchitecture& arch, std::uint64_t seed);

    Tensor forward(const Tensor& x) const;
    TimeWindow forward(const TimeWindow& x) const;

    struct Bound {
        std::vector<ad::ConvVars> layers;
        ad::ConvVars output;
    };
    Bound bind(ad::Tape& tape, bool trainable) const;
    static ad::Var apply(ad::Tape& tape, const Bound& bound, ad::Var x);

    const Geometry& geometry() const noexcept { return geometry_; }
    const std::vector<ConvLayerParams>& layers() const noexcept { return layers_; }
    const ConvLayerParams& output() const noexcept { return output_; }

    NamedTensors named_parameters() const;
    std::vector<Tensor*> parameters();
    std::string checksum() const;

private:
    Geometry geometry_;
    std::vector<ConvLayerParams> layers_;
    ConvLayerParams output_;
};

struct RefurbishTrainConfig {
    double alpha = 1.0;
    double beta = 20.0;
    std::size_t epochs = 60;
    std::size_t batch_size = 16;
    double learning_rate = 3e-3;
    std::uint64_t seed = 1;

    void validate() const;
};

struct AmputeeTrainingTriple {
    TimeWindow x_amp;
    TimeWindow x_corr;
    Tensor y_amp;
};

/// alpha * mse(h(x_amp), x_corr) + beta * mse(g(h(x_amp)), y_amp) for one triple.
double refurbish_loss(const AmputeeTrainingTriple& triple, const RefurbishModel& h, const FoundationModel& g_frozen,
                      const RefurbishTrainConfig& cfg);

/// Mean loss over the batch; when `gradients` is given, fills d(loss)/d(Theta_h)
/// in `h.parameters()` order. The foundation only ever enters the tape as constants.
double refurbish_batch_loss(std::span<const AmputeeTrainingTriple> batch, const RefurbishModel& h,
                            const FoundationModel& g_frozen, const RefurbishTrainConfig& cfg,
                            std::vector<Tensor>* gradients);

/// Gradient of mse(g(x), y) with respect to the input window x, through the frozen model.
Tensor foundation_input_gradient(const FoundationModel& g_frozen, const TimeWindow& x, const Tensor& y);

struct RefurbishTraining {
    RefurbishModel model;
    std::vector<double> loss_history;  // mean training loss per epoch
};

RefurbishTraining train_refurbish(const std::vector<AmputeeTrainingTriple>& data, const FoundationModel& g_frozen,
                                  const RefurbishArchitecture& arch, const RefurbishTrainConfig& cfg);

}  // namespace reprog
