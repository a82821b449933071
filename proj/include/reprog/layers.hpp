#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "reprog/autodiff.hpp"
#include "reprog/tensor.hpp"

namespace reprog {

struct ConvLayerParams {
    Tensor kernel;  // [out x in x kernel_size]
    Tensor bias;    // [out]
    std::size_t dilation = 1;

    std::size_t out_channels() const { return kernel.dim(0); }
    std::size_t in_channels() const { return kernel.dim(1); }
    std::size_t kernel_size() const { return kernel.dim(2); }
    bool residual() const { return in_channels() == out_channels(); }
};

struct MlpParams {
    Tensor w1;  // [hidden x in]
    Tensor b1;  // [hidden]
    Tensor w2;  // [out x hidden]
    Tensor b2;  // [out]

    std::size_t in_dim() const { return w1.dim(1); }
    std::size_t out_dim() const { return w2.dim(0); }
};

using Rng = std::mt19937_64;

/// Glorot-uniform weights, zero biases.
ConvLayerParams init_conv(std::size_t in, std::size_t out, std::size_t kernel_size, std::size_t dilation, Rng& rng);
MlpParams init_mlp(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);

/// Validates the inner dimensions of an MLP and of a conv stack's channel chain.
void check_mlp(const MlpParams& p);
void check_chain(std::span<const ConvLayerParams> layers, std::size_t in_channels);

Tensor causal_conv_forward(const Tensor& x, const ConvLayerParams& p);

/// Each layer: y = relu(conv(x) + x) when channels match, relu(conv(x)) otherwise.
/// Returns the full [C_last x T] activation sequence.
Tensor tcn_sequence(const Tensor& x, std::span<const ConvLayerParams> layers);

/// Feature vector: the final layer's activations at the last timestep.
Tensor tcn_forward(const Tensor& x, std::span<const ConvLayerParams> layers);

Tensor mlp_forward(const Tensor& f, const MlpParams& p);

double mse(const Tensor& pred, const Tensor& target);

namespace ad {

struct ConvVars {
    Var kernel;
    Var bias;
    std::size_t dilation = 1;
};

struct MlpVars {
    Var w1, b1, w2, b2;
};

/// Places a layer's parameters on the tape, tracked or as constants.
ConvVars bind(Tape& tape, const ConvLayerParams& p, bool trainable);
MlpVars bind(Tape& tape, const MlpParams& p, bool trainable);

Var tcn_sequence(Tape& tape, Var x, std::span<const ConvVars> layers);
Var tcn_forward(Tape& tape, Var x, std::span<const ConvVars> layers);
Var mlp_forward(Tape& tape, Var f, const MlpVars& p);

}  // namespace ad

}  // namespace reprog
